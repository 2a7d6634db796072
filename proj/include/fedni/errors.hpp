#ifndef FEDNI_ERRORS_HPP
#define FEDNI_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace fedni {

/// Shape or size mismatch between operands.
struct dimension_error : std::runtime_error {
    explicit dimension_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Non-finite value where a finite one is required.
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid parameter value or inconsistent experiment configuration.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed or truncated dataset/weight files.
struct format_error : std::runtime_error {
    explicit format_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Federation protocol violation (e.g. divergent weight manifests).
struct protocol_error : std::runtime_error {
    explicit protocol_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Unknown phenotype field kind or malformed phenotype table.
struct schema_error : std::runtime_error {
    explicit schema_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace fedni

#endif
