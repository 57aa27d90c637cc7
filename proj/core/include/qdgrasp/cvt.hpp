#pragma once

#include "qdgrasp/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace qdgrasp::cvt {

/// Centroids of a Voronoi partition of the unit hypercube, row-major n_cells x dim.
struct CvtGrid {
    std::size_t n_cells = 0;
    std::size_t dim = 0;
    std::vector<double> centroids;

    std::span<const double> centroid(std::size_t cell) const { return {centroids.data() + cell * dim, dim}; }
};

struct BuildOptions {
    std::size_t samples_per_cell = 50;
    // Floor on the sample count so that grids with few cells still get stable centroids.
    std::size_t min_samples = 10000;
    std::size_t max_iterations = 100;
    double shift_tolerance = 1e-6;
    std::size_t workers = 1;
};

/// Lloyd k-means over max(samples_per_cell * n_cells, min_samples) uniform samples of [0,1]^dim.
/// Deterministic for a given rng state; the worker count does not affect the result.
CvtGrid build_cvt(std::size_t n_cells, std::size_t dim, RngStream& rng, const BuildOptions& options = {});

/// Index of the L2-nearest centroid, lowest index on ties.
std::size_t nearest_cell(std::span<const double> point, const CvtGrid& grid);

/// Centroid cache keyed by (n_cells, dim, seed); returns the grid, building and
/// storing it under `cache_dir` when absent.
CvtGrid load_or_build(const std::filesystem::path& cache_dir, std::size_t n_cells, std::size_t dim,
                      std::uint64_t seed, const BuildOptions& options = {});

std::filesystem::path cache_path(const std::filesystem::path& cache_dir, std::size_t n_cells, std::size_t dim,
                                 std::uint64_t seed);

void save(const CvtGrid& grid, const std::filesystem::path& path);
std::optional<CvtGrid> load(const std::filesystem::path& path);

} // namespace qdgrasp::cvt
