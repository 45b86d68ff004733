#include "switchvi/grid.hpp"

#include "switchvi/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>

namespace switchvi {

std::string to_string(Boundary b) {
    return b == Boundary::extrapolate ? "extrapolate" : "clamp";
}

Boundary boundary_from_string(const std::string& s) {
    if (s == "extrapolate") return Boundary::extrapolate;
    if (s == "clamp") return Boundary::clamp;
    throw GridError("unknown boundary policy '" + s + "' (expected extrapolate or clamp)");
}

std::size_t max_entries_from_env() {
    if (const char* env = std::getenv("SWITCHVI_MAX_NODES"); env != nullptr && *env != '\0') {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end != nullptr && *end == '\0' && v > 0) {
            return static_cast<std::size_t>(v);
        }
        throw GridError("SWITCHVI_MAX_NODES must be a positive integer");
    }
    return kDefaultMaxEntries;
}

Grid::Grid(GridSpec spec, double horizon, std::size_t lambda, std::size_t max_entries)
    : spec_(std::move(spec)), horizon_(horizon) {
    const std::size_t k = spec_.nodes.size();
    if (k == 0 || spec_.lo.size() != k || spec_.hi.size() != k) {
        throw GridError("grid box and node counts must have one entry per state dimension");
    }
    if (spec_.time_steps < 0) {
        throw GridError("time_steps must be non-negative");
    }
    if (!(horizon > 0.0)) {
        throw GridError("horizon must be positive");
    }
    dx_.resize(k);
    stride_.resize(k);
    for (std::size_t c = 0; c < k; ++c) {
        if (!(spec_.lo[c] < spec_.hi[c]) || !std::isfinite(spec_.lo[c]) || !std::isfinite(spec_.hi[c])) {
            throw GridError("degenerate truncation box in dimension " + std::to_string(c + 1));
        }
        if (spec_.nodes[c] < 3) {
            throw GridError("need at least 3 nodes per dimension for central differences (dimension " +
                            std::to_string(c + 1) + ")");
        }
        dx_[c] = (spec_.hi[c] - spec_.lo[c]) / (spec_.nodes[c] - 1);
    }
    std::size_t s = 1;
    for (std::size_t c = k; c-- > 0;) {
        stride_[c] = s;
        s *= static_cast<std::size_t>(spec_.nodes[c]);
    }
    node_count_ = s;
    const double entries = static_cast<double>(lambda) * static_cast<double>(node_count_) *
                           (static_cast<double>(spec_.time_steps) + 1.0);
    if (entries > static_cast<double>(max_entries)) {
        throw GridError("memory estimate of " + std::to_string(static_cast<unsigned long long>(entries)) +
                        " field values exceeds the cap of " + std::to_string(max_entries) +
                        " (raise SWITCHVI_MAX_NODES or coarsen the grid)");
    }
    coords_.resize(node_count_ * k);
    for (std::size_t n = 0; n < node_count_; ++n) {
        for (std::size_t c = 0; c < k; ++c) {
            coords_[n * k + c] = coordinate(n, static_cast<int>(c));
        }
    }
}

double Grid::time(std::size_t slice) const {
    if (spec_.time_steps == 0) {
        return horizon_;
    }
    if (slice == static_cast<std::size_t>(spec_.time_steps)) {
        return horizon_;
    }
    return horizon_ * static_cast<double>(slice) / spec_.time_steps;
}

double Grid::coordinate(std::size_t node, int c) const {
    const auto cc = static_cast<std::size_t>(c);
    const int i = index(node, c);
    const int last = spec_.nodes[cc] - 1;
    if (i == last) {
        return spec_.hi[cc];
    }
    return spec_.lo[cc] + (spec_.hi[cc] - spec_.lo[cc]) * i / last;
}

std::vector<double> Grid::coordinates(std::size_t node) const {
    auto s = node_coordinates(node);
    return {s.begin(), s.end()};
}

bool Grid::on_boundary(std::size_t node) const {
    for (int c = 0; c < dim(); ++c) {
        const int i = index(node, c);
        if (i == 0 || i == extent(c) - 1) {
            return true;
        }
    }
    return false;
}

bool operator==(const Grid& a, const Grid& b) {
    return a.spec_.lo == b.spec_.lo && a.spec_.hi == b.spec_.hi && a.spec_.nodes == b.spec_.nodes &&
           a.spec_.time_steps == b.spec_.time_steps && a.spec_.boundary == b.spec_.boundary &&
           a.horizon_ == b.horizon_;
}

Grid build_grid(const GridSpec& spec, const Problem& problem) {
    if (static_cast<int>(spec.nodes.size()) != problem.dim_k()) {
        throw GridError("grid has " + std::to_string(spec.nodes.size()) + " dimensions but the problem has k=" +
                        std::to_string(problem.dim_k()));
    }
    return Grid(spec, problem.horizon(), static_cast<std::size_t>(problem.modes().size()), max_entries_from_env());
}

ValueField::ValueField(std::shared_ptr<const Grid> grid, ModeSpace modes)
    : grid_(std::move(grid)), modes_(modes), data_(grid_->slices() * static_cast<std::size_t>(modes.size()) *
                                                       grid_->node_count(),
                                                   0.0) {}

double interpolate(const ValueField& field, ModePair p, double t, std::span<const double> x) {
    const Grid& g = field.grid();
    if (!field.modes().contains(p)) {
        throw GridError("mode pair " + to_string(p) + " is outside the mode space");
    }
    if (static_cast<int>(x.size()) != g.dim()) {
        throw GridError("query point has the wrong dimension");
    }
    const double eps_t = 1e-12 * g.horizon();
    if (t < -eps_t || t > g.horizon() + eps_t || !std::isfinite(t)) {
        throw GridError("query time outside [0, T]");
    }
    const std::size_t flat = field.modes().flat(p);
    const int k = g.dim();

    std::size_t s0 = 0;
    double wt = 0.0;
    if (g.time_steps() > 0) {
        const double pos = std::clamp(t / g.dt(), 0.0, static_cast<double>(g.time_steps()));
        s0 = std::min(static_cast<std::size_t>(pos), static_cast<std::size_t>(g.time_steps() - 1));
        wt = pos - static_cast<double>(s0);
    }

    std::vector<std::size_t> base(static_cast<std::size_t>(k));
    std::vector<double> frac(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) {
        const auto cc = static_cast<std::size_t>(c);
        const double lo = g.spec().lo[cc];
        const double hi = g.spec().hi[cc];
        const double eps = 1e-12 * (hi - lo);
        if (x[cc] < lo - eps || x[cc] > hi + eps || !std::isfinite(x[cc])) {
            throw GridError("query point outside the grid box in dimension " + std::to_string(c + 1));
        }
        const double pos = std::clamp((x[cc] - lo) / g.dx(c), 0.0, static_cast<double>(g.extent(c) - 1));
        const auto i = std::min(static_cast<std::size_t>(pos), static_cast<std::size_t>(g.extent(c) - 2));
        base[cc] = i;
        frac[cc] = pos - static_cast<double>(i);
    }

    auto spatial = [&](std::size_t slice) {
        double acc = 0.0;
        const std::size_t corners = std::size_t{1} << k;
        for (std::size_t mask = 0; mask < corners; ++mask) {
            double w = 1.0;
            std::size_t node = 0;
            for (int c = 0; c < k; ++c) {
                const auto cc = static_cast<std::size_t>(c);
                const bool up = ((mask >> cc) & 1U) != 0;
                w *= up ? frac[cc] : 1.0 - frac[cc];
                node += (base[cc] + (up ? 1 : 0)) * g.stride(c);
            }
            if (w != 0.0) {
                acc += w * field.at(slice, flat, node);
            }
        }
        return acc;
    };

    const double v0 = spatial(s0);
    if (wt == 0.0 || g.time_steps() == 0) {
        return v0;
    }
    return (1.0 - wt) * v0 + wt * spatial(s0 + 1);
}

namespace {

void check_same_shape(const ValueField& a, const ValueField& b) {
    if (!(a.grid() == b.grid()) || !(a.modes() == b.modes())) {
        throw GridError("value fields live on different grids or mode spaces");
    }
}

} // namespace

double max_excess(const ValueField& a, const ValueField& b) {
    check_same_shape(a, b);
    return kernels::active().max_excess(a.data().data(), b.data().data(), a.data().size());
}

double max_abs_diff(const ValueField& a, const ValueField& b) {
    check_same_shape(a, b);
    return kernels::active().max_abs_diff(a.data().data(), b.data().data(), a.data().size());
}

SliceOperator::SliceOperator(const Grid& grid, const Problem& problem, double t)
    : nodes_(grid.node_count()),
      k_(static_cast<std::size_t>(grid.dim())),
      d_(static_cast<std::size_t>(problem.dim_d())) {
    const int k = grid.dim();

    // Offsets in {-1,0,1}^k, keyed base 3.
    std::vector<std::vector<int>> offsets;
    offsets.emplace_back(k_, 0);
    for (int c = 0; c < k; ++c) {
        for (int sgn : {-1, 1}) {
            std::vector<int> o(k_, 0);
            o[static_cast<std::size_t>(c)] = sgn;
            offsets.push_back(o);
        }
    }
    for (int c = 0; c < k; ++c) {
        for (int e = c + 1; e < k; ++e) {
            for (int sc : {-1, 1}) {
                for (int se : {-1, 1}) {
                    std::vector<int> o(k_, 0);
                    o[static_cast<std::size_t>(c)] = sc;
                    o[static_cast<std::size_t>(e)] = se;
                    offsets.push_back(o);
                }
            }
        }
    }
    auto key = [&](const std::vector<int>& o) {
        std::size_t kk = 0;
        for (std::size_t c = 0; c < k_; ++c) kk = kk * 3 + static_cast<std::size_t>(o[c] + 1);
        return kk;
    };
    std::size_t key_space = 1;
    for (std::size_t c = 0; c < k_; ++c) key_space *= 3;
    std::vector<int> slot_of(key_space, -1);
    deltas_.resize(offsets.size());
    for (std::size_t s = 0; s < offsets.size(); ++s) {
        slot_of[key(offsets[s])] = static_cast<int>(s);
        std::ptrdiff_t dlt = 0;
        for (int c = 0; c < k; ++c) {
            dlt += offsets[s][static_cast<std::size_t>(c)] * static_cast<std::ptrdiff_t>(grid.stride(c));
        }
        deltas_[s] = dlt;
    }

    const std::size_t slots = offsets.size();
    weights_.assign(slots * nodes_, 0.0);
    drift_.assign(nodes_ * k_, 0.0);
    vol_.assign(nodes_ * k_ * d_, 0.0);

    Problem::Evaluator ev(problem);
    std::vector<double> a(k_ * k_);
    std::vector<double> w(slots);
    std::vector<int> idx(k_);
    const Boundary policy = grid.spec().boundary;

    std::function<void(std::vector<int>&, double, int)> fold = [&](std::vector<int>& o, double weight, int from) {
        for (int c = from; c < k; ++c) {
            const auto cc = static_cast<std::size_t>(c);
            const int target = idx[cc] + o[cc];
            if (target >= 0 && target < grid.extent(c)) {
                continue;
            }
            const int saved = o[cc];
            const int inward = target < 0 ? 1 : -1;
            o[cc] = 0;
            if (policy == Boundary::extrapolate) {
                fold(o, 2.0 * weight, c + 1);
                o[cc] = inward;
                fold(o, -weight, c + 1);
            } else {
                fold(o, weight, c + 1);
            }
            o[cc] = saved;
            return;
        }
        w[static_cast<std::size_t>(slot_of[key(o)])] += weight;
    };
    auto add = [&](std::vector<int> o, double weight) {
        if (weight != 0.0) fold(o, weight, 0);
    };

    for (std::size_t n = 0; n < nodes_; ++n) {
        ev.set_point(t, grid.node_coordinates(n));
        for (int c = 0; c < k; ++c) idx[static_cast<std::size_t>(c)] = grid.index(n, c);
        for (std::size_t c = 0; c < k_; ++c) {
            drift_[n * k_ + c] = ev.drift(static_cast<int>(c));
            for (std::size_t r = 0; r < d_; ++r) {
                vol_[(n * k_ + c) * d_ + r] = ev.vol(static_cast<int>(c), static_cast<int>(r));
            }
        }
        for (std::size_t c = 0; c < k_; ++c) {
            for (std::size_t e = 0; e < k_; ++e) {
                double acc = 0.0;
                for (std::size_t r = 0; r < d_; ++r) acc += vol_[(n * k_ + c) * d_ + r] * vol_[(n * k_ + e) * d_ + r];
                a[c * k_ + e] = acc;
            }
        }
        std::fill(w.begin(), w.end(), 0.0);
        double rate = 0.0;
        for (int c = 0; c < k; ++c) {
            const auto cc = static_cast<std::size_t>(c);
            const double h = grid.dx(c);
            const double diff = 0.5 * a[cc * k_ + cc] / (h * h);
            std::vector<int> o(k_, 0);
            o[cc] = -1;
            add(o, diff);
            o[cc] = 1;
            add(o, diff);
            o[cc] = 0;
            add(o, -2.0 * diff);

            const double b = drift_[n * k_ + cc];
            if (b >= 0.0) {
                o[cc] = 1;
                add(o, b / h);
                o[cc] = 0;
                add(o, -b / h);
            } else {
                o[cc] = -1;
                add(o, -b / h);
                o[cc] = 0;
                add(o, b / h);
            }
            rate += std::fabs(b) / h + a[cc * k_ + cc] / (h * h);
        }
        for (int c = 0; c < k; ++c) {
            for (int e = c + 1; e < k; ++e) {
                const auto cc = static_cast<std::size_t>(c);
                const auto ee = static_cast<std::size_t>(e);
                const double cross = a[cc * k_ + ee] / (4.0 * grid.dx(c) * grid.dx(e));
                for (int sc : {-1, 1}) {
                    for (int se : {-1, 1}) {
                        std::vector<int> o(k_, 0);
                        o[cc] = sc;
                        o[ee] = se;
                        add(o, sc * se * cross);
                    }
                }
            }
        }
        rate_bound_ = std::max(rate_bound_, rate);
        for (std::size_t s = 0; s < slots; ++s) {
            weights_[s * nodes_ + n] = w[s];
            if (s > 0 && w[s] < 0.0) {
                ++negative_weights_;
                most_negative_ = std::min(most_negative_, w[s]);
            }
        }
    }

    std::ptrdiff_t lo = 0;
    std::ptrdiff_t hi = 0;
    for (auto dl : deltas_) {
        lo = std::min(lo, dl);
        hi = std::max(hi, dl);
    }
    safe_begin_ = std::min(nodes_, static_cast<std::size_t>(-lo));
    safe_end_ = nodes_ > static_cast<std::size_t>(hi) ? nodes_ - static_cast<std::size_t>(hi) : 0;
    safe_end_ = std::max(safe_end_, safe_begin_);
}

double SliceOperator::neighbour_sum(std::span<const double> v, std::size_t node) const {
    double acc = 0.0;
    for (std::size_t s = 1; s < deltas_.size(); ++s) {
        const double w = weights_[s * nodes_ + node];
        if (w != 0.0) {
            acc += w * v[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(node) + deltas_[s])];
        }
    }
    return acc;
}

// Same summation order as the stencil kernels. Folded-away slots carry zero weight and may
// point outside the box; adding their zero product would not change the sum.
double SliceOperator::apply_at(std::span<const double> v, std::size_t node) const {
    double acc = 0.0;
    for (std::size_t s = 0; s < deltas_.size(); ++s) {
        const double w = weights_[s * nodes_ + node];
        if (w != 0.0) acc = acc + w * v[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(node) + deltas_[s])];
    }
    return acc;
}

void SliceOperator::apply(std::span<const double> v, std::span<double> out) const {
    for (std::size_t n = 0; n < safe_begin_; ++n) out[n] = apply_at(v, n);
    kernels::active().stencil_apply(weights_.data(), nodes_, deltas_.data(), deltas_.size(), v.data(), out.data(),
                                    safe_begin_, safe_end_);
    for (std::size_t n = safe_end_; n < nodes_; ++n) out[n] = apply_at(v, n);
}

double discrete_generator(const SliceOperator& op, std::span<const double> field_slice, std::size_t node) {
    return op.apply_at(field_slice, node);
}

void upwind_gradient(const Grid& grid, const SliceOperator& op, std::span<const double> v, std::size_t node,
                     std::span<double> out) {
    for (int c = 0; c < grid.dim(); ++c) {
        const int i = grid.index(node, c);
        const std::size_t st = grid.stride(c);
        const bool has_fwd = i + 1 < grid.extent(c);
        const bool has_bwd = i > 0;
        const bool forward = op.drift(node, c) >= 0.0 ? has_fwd : !has_bwd;
        const double h = grid.dx(c);
        out[static_cast<std::size_t>(c)] = forward ? (v[node + st] - v[node]) / h : (v[node] - v[node - st]) / h;
    }
}

std::vector<SamplePoint> grid_samples(const Grid& grid, std::size_t max_points) {
    const std::size_t slices = grid.slices();
    const std::size_t nodes = grid.node_count();
    max_points = std::max<std::size_t>(max_points, 4);

    std::vector<std::size_t> slice_ids;
    const std::size_t slice_budget = std::max<std::size_t>(2, max_points / std::max<std::size_t>(nodes, 1));
    const std::size_t slice_step = slices <= slice_budget ? 1 : (slices - 1 + slice_budget - 2) / (slice_budget - 1);
    for (std::size_t s = 0; s < slices; s += slice_step) slice_ids.push_back(s);
    if (slice_ids.back() != slices - 1) slice_ids.push_back(slices - 1);

    const std::size_t node_budget = std::max<std::size_t>(1, max_points / slice_ids.size());
    const std::size_t node_step = nodes <= node_budget ? 1 : (nodes + node_budget - 1) / node_budget;
    std::vector<std::size_t> node_ids;
    for (std::size_t n = 0; n < nodes; n += node_step) node_ids.push_back(n);
    if (node_ids.back() != nodes - 1) node_ids.push_back(nodes - 1);

    std::vector<SamplePoint> out;
    out.reserve(slice_ids.size() * node_ids.size());
    for (std::size_t s : slice_ids) {
        for (std::size_t n : node_ids) {
            out.push_back({grid.time(s), grid.coordinates(n)});
        }
    }
    return out;
}

} // namespace switchvi
