#pragma once

#include <stdexcept>
#include <string>

namespace aniheat {

/// Base class for every error the library raises.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct NotPositiveDefinite final : Error {
    explicit NotPositiveDefinite(const std::string& what) : Error(what) {}
};

struct NoConvergence final : Error {
    explicit NoConvergence(const std::string& what) : Error(what) {}
};

struct QuadratureFailure final : Error {
    explicit QuadratureFailure(const std::string& what) : Error(what) {}
};

struct DegenerateInterval final : Error {
    explicit DegenerateInterval(const std::string& what) : Error(what) {}
};

struct InvalidExponent final : Error {
    explicit InvalidExponent(const std::string& what) : Error(what) {}
};

struct SpectralLeakage final : Error {
    explicit SpectralLeakage(const std::string& what) : Error(what) {}
};

struct NonUniformTimes final : Error {
    explicit NonUniformTimes(const std::string& what) : Error(what) {}
};

struct OrderTooHigh final : Error {
    explicit OrderTooHigh(const std::string& what) : Error(what) {}
};

struct InadmissibleExponents final : Error {
    explicit InadmissibleExponents(const std::string& what) : Error(what) {}
};

struct ZeroAccumulation final : Error {
    explicit ZeroAccumulation(const std::string& what) : Error(what) {}
};

struct NotNormalizable final : Error {
    explicit NotNormalizable(const std::string& what) : Error(what) {}
};

struct GridMismatch final : Error {
    explicit GridMismatch(const std::string& what) : Error(what) {}
};

struct ConfigError final : Error {
    explicit ConfigError(const std::string& what) : Error(what) {}
};

struct IoError final : Error {
    explicit IoError(const std::string& what) : Error(what) {}
};

} // namespace aniheat
