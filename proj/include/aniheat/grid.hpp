#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "aniheat/errors.hpp"

namespace aniheat {

inline constexpr int kMaxGridDim = 4;

/// Uniform periodic grid on the box [-L/2, L/2)^dim with N points per axis,
/// N a power of two. Point i along an axis sits at -L/2 + i h, h = L/N;
/// frequency index i maps to xi = 2 pi m / L with m in {-N/2, ..., N/2-1}.
class Grid {
public:
    Grid(int dim, int points_per_axis, double box_length)
        : dim_(dim), n_(points_per_axis), box_(box_length) {
        if (dim < 1 || dim > kMaxGridDim)
            throw Error("Grid: dim must be in [1, " + std::to_string(kMaxGridDim) + "]");
        if (n_ < 8 || (n_ & (n_ - 1)) != 0)
            throw Error("Grid: points per axis must be a power of two >= 8");
        if (!(box_ > 0.0)) throw Error("Grid: box length must be > 0");
    }

    int dim() const { return dim_; }
    int points_per_axis() const { return n_; }
    double box_length() const { return box_; }
    double spacing() const { return box_ / n_; }
    double cell_volume() const { return std::pow(spacing(), dim_); }

    std::size_t size() const {
        std::size_t s = 1;
        for (int d = 0; d < dim_; ++d) s *= static_cast<std::size_t>(n_);
        return s;
    }

    double coordinate(int i) const { return -0.5 * box_ + spacing() * i; }

    double frequency(int i) const {
        const int m = i < n_ / 2 ? i : i - n_;
        return 2.0 * M_PI * m / box_;
    }

    /// Decomposes a flat row-major index into per-axis indices.
    void unravel(std::size_t flat, std::span<int> indices) const {
        for (int d = dim_ - 1; d >= 0; --d) {
            indices[static_cast<std::size_t>(d)] = static_cast<int>(flat % static_cast<std::size_t>(n_));
            flat /= static_cast<std::size_t>(n_);
        }
    }

    void point(std::size_t flat, std::span<double> x) const {
        std::array<int, kMaxGridDim> idx{};
        unravel(flat, std::span<int>(idx.data(), static_cast<std::size_t>(dim_)));
        for (int d = 0; d < dim_; ++d) x[static_cast<std::size_t>(d)] = coordinate(idx[static_cast<std::size_t>(d)]);
    }

    void frequency_vector(std::size_t flat, std::span<double> xi) const {
        std::array<int, kMaxGridDim> idx{};
        unravel(flat, std::span<int>(idx.data(), static_cast<std::size_t>(dim_)));
        for (int d = 0; d < dim_; ++d) xi[static_cast<std::size_t>(d)] = frequency(idx[static_cast<std::size_t>(d)]);
    }

    bool operator==(const Grid& o) const { return dim_ == o.dim_ && n_ == o.n_ && box_ == o.box_; }
    bool operator!=(const Grid& o) const { return !(*this == o); }

private:
    int dim_;
    int n_;
    double box_;
};

/// Real scalar field sampled on a Grid, row-major.
class GridField {
public:
    explicit GridField(Grid grid) : grid_(grid), values_(grid.size(), 0.0) {}

    GridField(Grid grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
        if (values_.size() != grid_.size()) throw Error("GridField: value count mismatch");
        for (double v : values_)
            if (!std::isfinite(v)) throw Error("GridField: non-finite value");
    }

    static GridField sample(const Grid& grid, const std::function<double(std::span<const double>)>& f) {
        GridField out(grid);
        std::array<double, kMaxGridDim> x{};
        std::span<double> xs(x.data(), static_cast<std::size_t>(grid.dim()));
        for (std::size_t i = 0; i < grid.size(); ++i) {
            grid.point(i, xs);
            out.values_[i] = f(xs);
        }
        return out;
    }

    const Grid& grid() const { return grid_; }
    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    GridField& operator+=(const GridField& o) {
        require_same_grid(o);
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
        return *this;
    }
    GridField& operator-=(const GridField& o) {
        require_same_grid(o);
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
        return *this;
    }
    GridField& operator*=(double c) {
        for (double& v : values_) v *= c;
        return *this;
    }
    friend GridField operator+(GridField a, const GridField& b) { return a += b; }
    friend GridField operator-(GridField a, const GridField& b) { return a -= b; }
    friend GridField operator*(GridField a, double c) { return a *= c; }
    friend GridField operator*(double c, GridField a) { return a *= c; }

    void require_same_grid(const GridField& o) const {
        if (grid_ != o.grid_) throw GridMismatch("GridField: grids differ");
    }

private:
    Grid grid_;
    std::vector<double> values_;
};

// --- binary field format -------------------------------------------------
//
// 32-byte little-endian header: magic "AHGF", version u32, dim u32, N u32,
// L float64, reserved u64 (zero); then N^dim float64 values, row-major.

namespace detail {

inline void put_u32(std::string& s, std::uint32_t v) {
    for (int k = 0; k < 4; ++k) s.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
}
inline void put_u64(std::string& s, std::uint64_t v) {
    for (int k = 0; k < 8; ++k) s.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
}
inline void put_f64(std::string& s, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    put_u64(s, bits);
}
inline std::uint32_t get_u32(const unsigned char* p) {
    std::uint32_t v = 0;
    for (int k = 3; k >= 0; --k) v = (v << 8) | p[k];
    return v;
}
inline std::uint64_t get_u64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int k = 7; k >= 0; --k) v = (v << 8) | p[k];
    return v;
}
inline double get_f64(const unsigned char* p) {
    const std::uint64_t bits = get_u64(p);
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
}

} // namespace detail

inline constexpr std::uint32_t kFieldFormatVersion = 1;

inline std::string encode_field(const GridField& f) {
    std::string s;
    s.reserve(32 + 8 * f.size());
    s += "AHGF";
    detail::put_u32(s, kFieldFormatVersion);
    detail::put_u32(s, static_cast<std::uint32_t>(f.grid().dim()));
    detail::put_u32(s, static_cast<std::uint32_t>(f.grid().points_per_axis()));
    detail::put_f64(s, f.grid().box_length());
    detail::put_u64(s, 0); // reserved
    for (double v : f.values()) detail::put_f64(s, v);
    return s;
}

inline GridField decode_field(std::span<const unsigned char> bytes) {
    if (bytes.size() < 32 || std::memcmp(bytes.data(), "AHGF", 4) != 0)
        throw IoError("decode_field: bad magic or truncated header");
    const std::uint32_t version = detail::get_u32(bytes.data() + 4);
    if (version != kFieldFormatVersion)
        throw IoError("decode_field: unsupported version " + std::to_string(version));
    const std::uint32_t dim = detail::get_u32(bytes.data() + 8);
    const std::uint32_t n = detail::get_u32(bytes.data() + 12);
    const double box = detail::get_f64(bytes.data() + 16);
    Grid grid(static_cast<int>(dim), static_cast<int>(n), box);
    if (bytes.size() != 32 + 8 * grid.size()) throw IoError("decode_field: payload size mismatch");
    std::vector<double> values(grid.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        values[i] = detail::get_f64(bytes.data() + 32 + 8 * i);
    return GridField(grid, std::move(values));
}

inline void write_field(const GridField& f, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_field: cannot open " + path);
    const std::string s = encode_field(f);
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
    if (!out) throw IoError("write_field: write failed for " + path);
}

inline GridField read_field(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("read_field: cannot open " + path);
    std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_field(std::span<const unsigned char>(
        reinterpret_cast<const unsigned char*>(s.data()), s.size()));
}

/// CSV export: header x_1..x_n,value then one row per grid point.
inline void write_field_csv(const GridField& f, std::ostream& out) {
    const Grid& g = f.grid();
    for (int d = 0; d < g.dim(); ++d) out << "x_" << (d + 1) << ",";
    out << "value\n";
    std::array<double, kMaxGridDim> x{};
    std::span<double> xs(x.data(), static_cast<std::size_t>(g.dim()));
    char buf[32];
    for (std::size_t i = 0; i < f.size(); ++i) {
        g.point(i, xs);
        for (int d = 0; d < g.dim(); ++d) {
            std::snprintf(buf, sizeof(buf), "%.17g", xs[static_cast<std::size_t>(d)]);
            out << buf << ",";
        }
        std::snprintf(buf, sizeof(buf), "%.17g", f[i]);
        out << buf << "\n";
    }
}

inline void write_field_csv(const GridField& f, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("write_field_csv: cannot open " + path);
    write_field_csv(f, out);
}

} // namespace aniheat
