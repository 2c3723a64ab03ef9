#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace chtd {

/// Dense field sampled on a tensor grid. Values are row-major: the last
/// dimension varies fastest.
struct GridField {
    std::vector<std::vector<double>> coords;
    std::vector<double> values;
    std::string problem_id;

    GridField() = default;
    GridField(std::vector<std::vector<double>> coordinates, std::string id = {});

    std::size_t n_dims() const noexcept { return coords.size(); }
    std::vector<std::size_t> shape() const;
    std::size_t size() const noexcept { return values.size(); }

    std::size_t flat_index(std::span<const std::size_t> idx) const;
    double& at(std::span<const std::size_t> idx) { return values[flat_index(idx)]; }
    double at(std::span<const std::size_t> idx) const { return values[flat_index(idx)]; }

    /// 2D shorthand.
    double& operator()(std::size_t i, std::size_t j) { return values[i * coords[1].size() + j]; }
    double operator()(std::size_t i, std::size_t j) const { return values[i * coords[1].size() + j]; }

    bool same_grid(const GridField& other) const;
};

/// Product of the coordinate list lengths.
std::size_t grid_size(std::span<const std::vector<double>> coords);

/// n equispaced coordinates spanning [lo, hi] inclusive.
std::vector<double> linspace(double lo, double hi, std::size_t n);

/// CSV with header "i0,...,x0,...,value", one row per grid point.
void write_grid_csv(const GridField& field, const std::filesystem::path& path);

/// Raw little-endian tensor: "GRDF", u32 version, u32 ndims, u64 extent per dim,
/// f64 coordinates per dim, then the f64 values in row-major order.
void write_grid_raw(const GridField& field, const std::filesystem::path& path);
GridField read_grid_raw(const std::filesystem::path& path);

}  // namespace chtd
