#include "qdgrasp/novelty.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <stdexcept>
#include <unordered_set>

namespace qdgrasp::novelty {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

double wrap_to_circle(double a)
{
    double w = std::fmod(a, two_pi);
    if (w < 0.0)
        w += two_pi;
    return w;
}

double angle_distance(double a, double b)
{
    double d = std::fmod(std::abs(a - b), two_pi);
    if (d > std::numbers::pi)
        d = two_pi - d;
    return d / std::numbers::pi;
}

double squared_distance(const double* a, const double* b, std::size_t dim)
{
    double s = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
        const double d = a[j] - b[j];
        s += d * d;
    }
    return s;
}

// Mean of the k smallest values, summed in ascending order.
double mean_of_sorted(std::vector<double>& values)
{
    if (values.empty())
        return std::numeric_limits<double>::infinity();
    std::sort(values.begin(), values.end());
    double s = 0.0;
    for (double v : values)
        s += v;
    return s / static_cast<double>(values.size());
}

class KdTree {
public:
    KdTree(const std::vector<double>& coords, std::size_t dim) : coords_(coords), dim_(dim)
    {
        const std::size_t n = coords.size() / dim;
        order_.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            order_[i] = i;
        nodes_.reserve(2 * n / leaf_size + 2);
        build(0, n);
    }

    // Squared distances of the k nearest points whose id differs from self_id.
    void knn(const double* q, std::size_t k, std::int64_t self_id, const std::vector<std::int64_t>& ids,
             std::priority_queue<double>& heap) const
    {
        search(0, q, k, self_id, ids, heap);
    }

private:
    static constexpr std::size_t leaf_size = 12;

    struct Node {
        std::size_t begin = 0, end = 0;
        std::size_t axis = 0;
        double split = 0.0;
        int left = -1, right = -1;
    };

    int build(std::size_t begin, std::size_t end)
    {
        const int id = static_cast<int>(nodes_.size());
        nodes_.push_back({begin, end});
        if (end - begin <= leaf_size)
            return id;

        std::size_t axis = 0;
        double best_spread = -1.0;
        for (std::size_t d = 0; d < dim_; ++d) {
            double lo = std::numeric_limits<double>::infinity(), hi = -lo;
            for (std::size_t i = begin; i < end; ++i) {
                const double v = coords_[order_[i] * dim_ + d];
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            if (hi - lo > best_spread) {
                best_spread = hi - lo;
                axis = d;
            }
        }
        if (best_spread <= 0.0)
            return id;

        const std::size_t mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                         order_.begin() + static_cast<std::ptrdiff_t>(mid),
                         order_.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t a, std::size_t b) {
                             return coords_[a * dim_ + axis] < coords_[b * dim_ + axis];
                         });
        nodes_[id].axis = axis;
        nodes_[id].split = coords_[order_[mid] * dim_ + axis];
        const int left = build(begin, mid);
        const int right = build(mid, end);
        nodes_[id].left = left;
        nodes_[id].right = right;
        return id;
    }

    void search(int node_id, const double* q, std::size_t k, std::int64_t self_id, const std::vector<std::int64_t>& ids,
                std::priority_queue<double>& heap) const
    {
        const Node& node = nodes_[node_id];
        if (node.left < 0) {
            for (std::size_t i = node.begin; i < node.end; ++i) {
                const std::size_t p = order_[i];
                if (ids[p] == self_id)
                    continue;
                const double d2 = squared_distance(q, &coords_[p * dim_], dim_);
                if (heap.size() < k)
                    heap.push(d2);
                else if (d2 < heap.top()) {
                    heap.pop();
                    heap.push(d2);
                }
            }
            return;
        }
        const double diff = q[node.axis] - node.split;
        const int near = diff < 0.0 ? node.left : node.right;
        const int far = diff < 0.0 ? node.right : node.left;
        search(near, q, k, self_id, ids, heap);
        if (heap.size() < k || diff * diff <= heap.top())
            search(far, q, k, self_id, ids, heap);
    }

    const std::vector<double>& coords_;
    std::size_t dim_;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
};

} // namespace

double component_distance(std::span<const double> x, std::span<const double> y, const BehaviorComponentSpec& spec)
{
    if (x.size() != spec.dim || y.size() != spec.dim)
        throw std::logic_error("component_distance: dimension mismatch");
    if (spec.metric == Metric::wrapped_angle)
        return angle_distance(x[0], y[0]);
    double s = 0.0;
    for (std::size_t j = 0; j < spec.dim; ++j) {
        const double d = normalize_coordinate(x[j], spec.bounds[j]) - normalize_coordinate(y[j], spec.bounds[j]);
        s += d * d;
    }
    return std::sqrt(s);
}

std::vector<ReferencePoint> make_reference_set(std::initializer_list<std::span<const Individual>> groups)
{
    std::vector<ReferencePoint> out;
    std::unordered_set<std::int64_t> seen;
    for (auto group : groups) {
        for (const auto& ind : group) {
            if (seen.insert(ind.eval_id).second)
                out.push_back({ind.eval_id, &ind.behavior});
        }
    }
    return out;
}

struct NoveltyQueryIndex::Component {
    BehaviorComponentSpec spec;
    bool active = true;
    // Normalized coordinates for euclidean components, angles in [0, 2pi) otherwise.
    std::vector<double> coords;
    std::vector<std::int64_t> ids;
    std::unique_ptr<KdTree> tree;
    // Wrapped-angle fast path: positions sorted by angle.
    std::vector<std::size_t> angle_order;
    bool use_tree = false;

    std::size_t count() const { return ids.size(); }

    void encode(std::span<const double> raw, double* out) const
    {
        if (spec.metric == Metric::wrapped_angle) {
            out[0] = wrap_to_circle(raw[0]);
            return;
        }
        for (std::size_t j = 0; j < spec.dim; ++j)
            out[j] = normalize_coordinate(raw[j], spec.bounds[j]);
    }

    double distance(const double* a, const double* b) const
    {
        if (spec.metric == Metric::wrapped_angle)
            return angle_distance(a[0], b[0]);
        return std::sqrt(squared_distance(a, b, spec.dim));
    }

    double brute_force(const double* q, std::int64_t self_id, std::size_t k) const
    {
        std::vector<double> d;
        d.reserve(count());
        for (std::size_t i = 0; i < count(); ++i) {
            if (ids[i] != self_id)
                d.push_back(distance(q, &coords[i * spec.dim]));
        }
        if (d.size() > k) {
            std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k - 1), d.end());
            d.resize(k);
        }
        return mean_of_sorted(d);
    }

    double tree_query(const double* q, std::int64_t self_id, std::size_t k) const
    {
        std::priority_queue<double> heap;
        tree->knn(q, k, self_id, ids, heap);
        std::vector<double> d;
        d.reserve(heap.size());
        while (!heap.empty()) {
            d.push_back(std::sqrt(heap.top()));
            heap.pop();
        }
        return mean_of_sorted(d);
    }

    double circular_query(double q, std::int64_t self_id, std::size_t k) const
    {
        const std::size_t n = angle_order.size();
        auto angle_at = [&](std::size_t pos) { return coords[angle_order[pos]]; };
        const auto it = std::lower_bound(angle_order.begin(), angle_order.end(), q,
                                         [&](std::size_t p, double v) { return coords[p] < v; });
        std::size_t right = static_cast<std::size_t>(it - angle_order.begin()) % n;
        std::size_t left = (right + n - 1) % n;
        std::size_t visited = 0;
        std::vector<double> d;
        d.reserve(k);
        while (d.size() < k && visited < n) {
            std::size_t take;
            if (visited + 1 == n) {
                take = right;
            }
            else {
                const double dl = angle_distance(q, angle_at(left));
                const double dr = angle_distance(q, angle_at(right));
                take = dr <= dl ? right : left;
            }
            if (take == right)
                right = (right + 1) % n;
            else
                left = (left + n - 1) % n;
            ++visited;
            if (ids[angle_order[take]] != self_id)
                d.push_back(angle_distance(q, angle_at(take)));
        }
        return mean_of_sorted(d);
    }
};

NoveltyQueryIndex::NoveltyQueryIndex(std::span<const ReferencePoint> reference, std::vector<BehaviorComponentSpec> specs,
                                     std::vector<bool> active, std::size_t tree_threshold)
{
    validate_specs(specs);
    if (!active.empty() && active.size() != specs.size())
        throw std::logic_error("NoveltyQueryIndex: mask size differs from component count");

    const std::size_t n_components = specs.size();
    components_.reserve(n_components);
    for (std::size_t i = 0; i < specs.size(); ++i) {
        auto c = std::make_unique<Component>();
        c->spec = std::move(specs[i]);
        c->active = active.empty() || active[i];
        if (c->active) {
            const std::size_t dim = c->spec.dim;
            for (const auto& ref : reference) {
                if (ref.behavior->components.size() != n_components)
                    throw std::logic_error("NoveltyQueryIndex: behavior vector size mismatch");
                const auto& comp = ref.behavior->components[i];
                if (!comp)
                    continue;
                if (comp->size() != dim)
                    throw std::logic_error("NoveltyQueryIndex: behavior dimension mismatch");
                c->coords.resize(c->coords.size() + dim);
                c->encode(*comp, &c->coords[c->coords.size() - dim]);
                c->ids.push_back(ref.id);
            }
            c->use_tree = c->count() >= tree_threshold && c->count() > 0;
            if (c->use_tree) {
                if (c->spec.metric == Metric::wrapped_angle) {
                    c->angle_order.resize(c->count());
                    for (std::size_t p = 0; p < c->count(); ++p)
                        c->angle_order[p] = p;
                    std::stable_sort(c->angle_order.begin(), c->angle_order.end(),
                                     [&](std::size_t a, std::size_t b) { return c->coords[a] < c->coords[b]; });
                }
                else {
                    c->tree = std::make_unique<KdTree>(c->coords, dim);
                }
            }
        }
        components_.push_back(std::move(c));
    }
}

NoveltyQueryIndex::~NoveltyQueryIndex() = default;
NoveltyQueryIndex::NoveltyQueryIndex(NoveltyQueryIndex&&) noexcept = default;
NoveltyQueryIndex& NoveltyQueryIndex::operator=(NoveltyQueryIndex&&) noexcept = default;

std::size_t NoveltyQueryIndex::component_count() const { return components_.size(); }
std::size_t NoveltyQueryIndex::size(std::size_t component) const { return components_.at(component)->count(); }
bool NoveltyQueryIndex::uses_tree(std::size_t component) const { return components_.at(component)->use_tree; }
bool NoveltyQueryIndex::active(std::size_t component) const { return components_.at(component)->active; }
const BehaviorComponentSpec& NoveltyQueryIndex::spec(std::size_t component) const
{
    return components_.at(component)->spec;
}

double NoveltyQueryIndex::query(std::size_t component, std::span<const double> point, std::int64_t self_id,
                                std::size_t k) const
{
    if (k == 0)
        throw std::logic_error("knn novelty requires k >= 1");
    const Component& c = *components_.at(component);
    if (point.size() != c.spec.dim)
        throw std::logic_error("novelty query: dimension mismatch");
    if (!c.active)
        throw std::logic_error("novelty query on a masked component");

    std::vector<double> q(c.spec.dim);
    c.encode(point, q.data());
    if (!c.use_tree)
        return c.brute_force(q.data(), self_id, k);
    if (c.spec.metric == Metric::wrapped_angle)
        return c.circular_query(q[0], self_id, k);
    return c.tree_query(q.data(), self_id, k);
}

std::vector<std::optional<double>> knn_novelty(const Individual& query, const NoveltyQueryIndex& index, std::size_t k)
{
    if (query.behavior.size() != index.component_count())
        throw std::logic_error("knn_novelty: behavior vector size mismatch");
    std::vector<std::optional<double>> out(index.component_count());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto& comp = query.behavior.components[i];
        if (comp && index.active(i))
            out[i] = index.query(i, *comp, query.eval_id, k);
    }
    return out;
}

bool more_novel(double nov_a, std::int64_t id_a, double nov_b, std::int64_t id_b)
{
    if (nov_a != nov_b)
        return nov_a > nov_b;
    return id_a < id_b;
}

} // namespace qdgrasp::novelty
