#ifndef FEDNI_WEIGHTS_HPP
#define FEDNI_WEIGHTS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "fedni/tape.hpp"

namespace fedni {

/// Flat, ordered serialization of a model's parameters: a shape manifest plus
/// the concatenated values. Two models with identical layer specs produce
/// identical manifests.
struct WeightVector {
    struct LayerEntry {
        std::string name;
        std::vector<std::uint32_t> dims;
        bool operator==(const LayerEntry& o) const { return name == o.name && dims == o.dims; }
    };
    std::vector<LayerEntry> manifest;
    std::vector<double> values;

    bool manifest_matches(const WeightVector& o) const { return manifest == o.manifest; }
    bool operator==(const WeightVector& o) const { return manifest == o.manifest && values == o.values; }
};

WeightVector pack_params(const std::vector<ParamTensor*>& params);

/// Writes values back into the parameters; throws protocol_error when the
/// manifest does not match the parameter list.
void unpack_params(const WeightVector& w, const std::vector<ParamTensor*>& params);

/// Wire format: version byte (1), u32 layer count, then per layer
/// u32 name length + UTF-8 name + u32 dim count + u32 dims, followed by the
/// value array as little-endian 64-bit floats. Round-trip is bit-exact.
std::vector<std::uint8_t> serialize_weights(const WeightVector& w);
WeightVector deserialize_weights(const std::vector<std::uint8_t>& bytes);

} // namespace fedni

#endif
