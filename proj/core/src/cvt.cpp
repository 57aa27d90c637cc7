#include "qdgrasp/cvt.hpp"

#include "qdgrasp/parallel.hpp"
#include "qdgrasp/types.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace qdgrasp::cvt {

namespace {

// Squared distance with early exit once `bound` is exceeded.
double bounded_sq_distance(const double* a, const double* b, std::size_t dim, double bound)
{
    double s = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
        const double d = a[j] - b[j];
        s += d * d;
        if (s > bound)
            return s;
    }
    return s;
}

std::size_t nearest(const double* p, const std::vector<double>& centroids, std::size_t n_cells, std::size_t dim)
{
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n_cells; ++c) {
        const double d = bounded_sq_distance(p, &centroids[c * dim], dim, best_d);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

} // namespace

CvtGrid build_cvt(std::size_t n_cells, std::size_t dim, RngStream& rng, const BuildOptions& options)
{
    if (n_cells == 0 || dim == 0)
        throw ConfigError("build_cvt requires n_cells >= 1 and dim >= 1");

    const std::size_t n_samples = std::max({n_cells, options.samples_per_cell * n_cells, options.min_samples});
    std::vector<double> samples(n_samples * dim);
    for (auto& v : samples)
        v = rng.uniform01();

    CvtGrid grid{n_cells, dim, std::vector<double>(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(n_cells * dim))};
    std::vector<std::size_t> assignment(n_samples);
    std::vector<double> sums(n_cells * dim);
    std::vector<std::size_t> counts(n_cells);

    for (std::size_t it = 0; it < options.max_iterations; ++it) {
        parallel_for(n_samples, options.workers, [&](std::size_t s) {
            assignment[s] = nearest(&samples[s * dim], grid.centroids, n_cells, dim);
        });

        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t s = 0; s < n_samples; ++s) {
            const std::size_t c = assignment[s];
            ++counts[c];
            for (std::size_t j = 0; j < dim; ++j)
                sums[c * dim + j] += samples[s * dim + j];
        }

        double max_shift = 0.0;
        for (std::size_t c = 0; c < n_cells; ++c) {
            if (counts[c] == 0)
                continue;
            double shift = 0.0;
            for (std::size_t j = 0; j < dim; ++j) {
                const double updated = sums[c * dim + j] / static_cast<double>(counts[c]);
                const double d = updated - grid.centroids[c * dim + j];
                shift += d * d;
                grid.centroids[c * dim + j] = updated;
            }
            max_shift = std::max(max_shift, std::sqrt(shift));
        }
        if (max_shift < options.shift_tolerance)
            break;
    }
    return grid;
}

std::size_t nearest_cell(std::span<const double> point, const CvtGrid& grid)
{
    if (point.size() != grid.dim)
        throw std::logic_error("nearest_cell: dimension mismatch");
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < grid.n_cells; ++c) {
        double d = 0.0;
        for (std::size_t j = 0; j < grid.dim; ++j) {
            const double diff = point[j] - grid.centroids[c * grid.dim + j];
            d += diff * diff;
        }
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

std::filesystem::path cache_path(const std::filesystem::path& cache_dir, std::size_t n_cells, std::size_t dim,
                                 std::uint64_t seed)
{
    return cache_dir / ("cvt_" + std::to_string(n_cells) + "_" + std::to_string(dim) + "_" + std::to_string(seed) + ".dat");
}

void save(const CvtGrid& grid, const std::filesystem::path& path)
{
    std::filesystem::create_directories(path.parent_path());
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out)
            throw std::runtime_error("cannot write centroid cache " + tmp);
        const std::uint64_t header[2] = {grid.n_cells, grid.dim};
        out.write(reinterpret_cast<const char*>(header), sizeof(header));
        out.write(reinterpret_cast<const char*>(grid.centroids.data()),
                  static_cast<std::streamsize>(grid.centroids.size() * sizeof(double)));
    }
    std::filesystem::rename(tmp, path);
}

std::optional<CvtGrid> load(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        return std::nullopt;
    std::uint64_t header[2] = {0, 0};
    in.read(reinterpret_cast<char*>(header), sizeof(header));
    if (!in || header[0] == 0 || header[1] == 0)
        return std::nullopt;
    CvtGrid grid{header[0], header[1], std::vector<double>(header[0] * header[1])};
    in.read(reinterpret_cast<char*>(grid.centroids.data()),
            static_cast<std::streamsize>(grid.centroids.size() * sizeof(double)));
    if (!in)
        return std::nullopt;
    return grid;
}

CvtGrid load_or_build(const std::filesystem::path& cache_dir, std::size_t n_cells, std::size_t dim,
                      std::uint64_t seed, const BuildOptions& options)
{
    const auto path = cache_path(cache_dir, n_cells, dim, seed);
    if (auto cached = load(path); cached && cached->n_cells == n_cells && cached->dim == dim)
        return *cached;
    RngStream rng(seed, "cvt");
    CvtGrid grid = build_cvt(n_cells, dim, rng, options);
    save(grid, path);
    return grid;
}

} // namespace qdgrasp::cvt
