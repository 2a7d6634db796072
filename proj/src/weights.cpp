#include "fedni/weights.hpp"

#include <cstring>

#include "fedni/errors.hpp"

namespace fedni {

WeightVector pack_params(const std::vector<ParamTensor*>& params) {
    WeightVector w;
    for (const ParamTensor* p : params) {
        WeightVector::LayerEntry e;
        e.name = p->name;
        e.dims = {std::uint32_t(p->value.rows()), std::uint32_t(p->value.cols())};
        w.manifest.push_back(std::move(e));
        w.values.insert(w.values.end(), p->value.raw().begin(), p->value.raw().end());
    }
    return w;
}

void unpack_params(const WeightVector& w, const std::vector<ParamTensor*>& params) {
    if (w.manifest.size() != params.size())
        throw protocol_error("unpack_params: manifest has " + std::to_string(w.manifest.size()) +
                             " layers, model has " + std::to_string(params.size()));
    std::size_t offset = 0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& e = w.manifest[i];
        ParamTensor* p = params[i];
        if (e.name != p->name || e.dims.size() != 2 || e.dims[0] != p->value.rows() ||
            e.dims[1] != p->value.cols())
            throw protocol_error("unpack_params: layer '" + e.name + "' does not match '" + p->name + "'");
        const std::size_t count = p->value.size();
        if (offset + count > w.values.size()) throw protocol_error("unpack_params: value array too short");
        std::memcpy(p->value.raw().data(), w.values.data() + offset, count * sizeof(double));
        offset += count;
    }
    if (offset != w.values.size()) throw protocol_error("unpack_params: value array too long");
}

namespace {
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(std::uint8_t(v & 0xff));
    out.push_back(std::uint8_t((v >> 8) & 0xff));
    out.push_back(std::uint8_t((v >> 16) & 0xff));
    out.push_back(std::uint8_t((v >> 24) & 0xff));
}

std::uint32_t get_u32(const std::vector<std::uint8_t>& in, std::size_t& pos) {
    if (pos + 4 > in.size()) throw format_error("weight stream truncated");
    std::uint32_t v = std::uint32_t(in[pos]) | (std::uint32_t(in[pos + 1]) << 8) |
                      (std::uint32_t(in[pos + 2]) << 16) | (std::uint32_t(in[pos + 3]) << 24);
    pos += 4;
    return v;
}
} // namespace

std::vector<std::uint8_t> serialize_weights(const WeightVector& w) {
    std::vector<std::uint8_t> out;
    out.push_back(1); // version
    put_u32(out, std::uint32_t(w.manifest.size()));
    std::size_t expect = 0;
    for (const auto& e : w.manifest) {
        put_u32(out, std::uint32_t(e.name.size()));
        out.insert(out.end(), e.name.begin(), e.name.end());
        put_u32(out, std::uint32_t(e.dims.size()));
        std::size_t numel = 1;
        for (std::uint32_t d : e.dims) {
            put_u32(out, d);
            numel *= d;
        }
        expect += numel;
    }
    if (expect != w.values.size())
        throw format_error("serialize_weights: manifest dims disagree with value count");
    const std::size_t base = out.size();
    out.resize(base + w.values.size() * sizeof(double));
    std::memcpy(out.data() + base, w.values.data(), w.values.size() * sizeof(double));
    return out;
}

WeightVector deserialize_weights(const std::vector<std::uint8_t>& bytes) {
    std::size_t pos = 0;
    if (bytes.empty() || bytes[pos] != 1) throw format_error("weight stream: unsupported version");
    ++pos;
    WeightVector w;
    const std::uint32_t layers = get_u32(bytes, pos);
    std::size_t expect = 0;
    for (std::uint32_t i = 0; i < layers; ++i) {
        WeightVector::LayerEntry e;
        const std::uint32_t name_len = get_u32(bytes, pos);
        if (pos + name_len > bytes.size()) throw format_error("weight stream truncated in name");
        e.name.assign(bytes.begin() + long(pos), bytes.begin() + long(pos + name_len));
        pos += name_len;
        const std::uint32_t nd = get_u32(bytes, pos);
        std::size_t numel = 1;
        for (std::uint32_t d = 0; d < nd; ++d) {
            e.dims.push_back(get_u32(bytes, pos));
            numel *= e.dims.back();
        }
        expect += numel;
        w.manifest.push_back(std::move(e));
    }
    if (pos + expect * sizeof(double) != bytes.size())
        throw format_error("weight stream: payload size mismatch");
    w.values.resize(expect);
    std::memcpy(w.values.data(), bytes.data() + pos, expect * sizeof(double));
    return w;
}

} // namespace fedni
