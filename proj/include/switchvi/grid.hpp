#pragma once

#include "switchvi/model.hpp"
#include "switchvi/validate.hpp"

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace switchvi {

class GridError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Boundary {
    extrapolate, // ghost node continues the field linearly
    clamp,       // ghost node copies the nearest in-box value
};

std::string to_string(Boundary b);
Boundary boundary_from_string(const std::string& s);

struct GridSpec {
    std::vector<double> lo;
    std::vector<double> hi;
    std::vector<int> nodes;
    int time_steps = 1;
    Boundary boundary = Boundary::extrapolate;
};

/// Default cap on stored field entries (modes x slices x nodes); SWITCHVI_MAX_NODES overrides.
constexpr std::size_t kDefaultMaxEntries = 50'000'000;

std::size_t max_entries_from_env();

/// Uniform tensor-product grid on a truncation box. Nodes are numbered row-major:
/// the last coordinate varies fastest.
class Grid {
public:
    Grid(GridSpec spec, double horizon, std::size_t lambda, std::size_t max_entries);

    const GridSpec& spec() const { return spec_; }
    int dim() const { return static_cast<int>(spec_.nodes.size()); }
    std::size_t node_count() const { return node_count_; }
    int time_steps() const { return spec_.time_steps; }
    std::size_t slices() const { return static_cast<std::size_t>(spec_.time_steps) + 1; }
    double horizon() const { return horizon_; }
    double dt() const { return horizon_ / spec_.time_steps; }
    double time(std::size_t slice) const;
    double dx(int c) const { return dx_[static_cast<std::size_t>(c)]; }
    std::size_t stride(int c) const { return stride_[static_cast<std::size_t>(c)]; }
    int extent(int c) const { return spec_.nodes[static_cast<std::size_t>(c)]; }

    int index(std::size_t node, int c) const {
        return static_cast<int>((node / stride_[static_cast<std::size_t>(c)]) %
                                static_cast<std::size_t>(spec_.nodes[static_cast<std::size_t>(c)]));
    }
    double coordinate(std::size_t node, int c) const;
    std::vector<double> coordinates(std::size_t node) const;
    std::span<const double> node_coordinates(std::size_t node) const {
        return {coords_.data() + node * spec_.nodes.size(), spec_.nodes.size()};
    }
    bool on_boundary(std::size_t node) const;

    friend bool operator==(const Grid& a, const Grid& b);

private:
    GridSpec spec_;
    double horizon_;
    std::size_t node_count_ = 1;
    std::vector<double> dx_;
    std::vector<std::size_t> stride_;
    std::vector<double> coords_;
};

Grid build_grid(const GridSpec& spec, const Problem& problem);

/// Value surfaces v^{ij} over every time slice. Layout: [slice][pair][node].
class ValueField {
public:
    ValueField(std::shared_ptr<const Grid> grid, ModeSpace modes);

    const Grid& grid() const { return *grid_; }
    std::shared_ptr<const Grid> grid_ptr() const { return grid_; }
    const ModeSpace& modes() const { return modes_; }

    std::size_t slice_size() const { return static_cast<std::size_t>(modes_.size()) * grid_->node_count(); }
    std::span<double> slice(std::size_t s) { return {data_.data() + s * slice_size(), slice_size()}; }
    std::span<const double> slice(std::size_t s) const { return {data_.data() + s * slice_size(), slice_size()}; }
    std::span<const double> values(std::size_t s, std::size_t flat_pair) const {
        return {data_.data() + s * slice_size() + flat_pair * grid_->node_count(), grid_->node_count()};
    }
    double at(std::size_t s, std::size_t flat_pair, std::size_t node) const {
        return data_[s * slice_size() + flat_pair * grid_->node_count() + node];
    }
    double& at(std::size_t s, std::size_t flat_pair, std::size_t node) {
        return data_[s * slice_size() + flat_pair * grid_->node_count() + node];
    }
    std::span<const double> data() const { return data_; }
    std::span<double> data() { return data_; }

private:
    std::shared_ptr<const Grid> grid_;
    ModeSpace modes_;
    std::vector<double> data_;
};

/// Multilinear in space, linear in time. Throws GridError outside the grid hull.
double interpolate(const ValueField& field, ModePair p, double t, std::span<const double> x);

/// Max over nodes, slices and pairs of (a - b)^+. Throws GridError on shape mismatch.
double max_excess(const ValueField& a, const ValueField& b);
double max_abs_diff(const ValueField& a, const ValueField& b);

/// Discrete generator  b.D + 1/2 Tr(a D^2)  at one time level, stored by diagonals.
/// Slot 0 is the node itself; the rest are the axis and cross neighbours.
class SliceOperator {
public:
    SliceOperator(const Grid& grid, const Problem& problem, double t);

    std::size_t slots() const { return deltas_.size(); }
    std::ptrdiff_t delta(std::size_t slot) const { return deltas_[slot]; }
    double weight(std::size_t slot, std::size_t node) const { return weights_[slot * nodes_ + node]; }
    double center(std::size_t node) const { return weights_[node]; }

    /// Sum of neighbour contributions, excluding the node's own value.
    double neighbour_sum(std::span<const double> v, std::size_t node) const;
    double apply_at(std::span<const double> v, std::size_t node) const;
    void apply(std::span<const double> v, std::span<double> out) const;

    /// Drift and volatility sampled at the nodes (node-major).
    double drift(std::size_t node, int c) const { return drift_[node * k_ + static_cast<std::size_t>(c)]; }
    double vol(std::size_t node, int c, int r) const {
        return vol_[(node * k_ + static_cast<std::size_t>(c)) * d_ + static_cast<std::size_t>(r)];
    }

    /// dt * max_nodes sum_c (|b_c|/dx_c + a_cc/dx_c^2).
    double explicit_bound(double dt) const { return dt * rate_bound_; }
    std::size_t negative_weights() const { return negative_weights_; }
    double most_negative_weight() const { return most_negative_; }

private:
    std::size_t nodes_;
    std::size_t k_;
    std::size_t d_;
    std::vector<std::ptrdiff_t> deltas_;
    std::vector<double> weights_;
    std::vector<double> drift_;
    std::vector<double> vol_;
    std::size_t safe_begin_ = 0;
    std::size_t safe_end_ = 0;
    double rate_bound_ = 0.0;
    std::size_t negative_weights_ = 0;
    double most_negative_ = 0.0;
};

/// (L phi)(node) for the operator built at the slice time.
double discrete_generator(const SliceOperator& op, std::span<const double> field_slice, std::size_t node);

/// Upwind gradient of v at a node: forward difference where b_c >= 0, backward otherwise,
/// falling back to the one-sided difference that stays inside the box.
void upwind_gradient(const Grid& grid, const SliceOperator& op, std::span<const double> v, std::size_t node,
                     std::span<double> out);

/// Space-time sample points on the grid for the assumption validators, thinned to at most max_points.
/// The first and last slices and the first and last nodes are always kept.
std::vector<SamplePoint> grid_samples(const Grid& grid, std::size_t max_points = 20'000);

struct MonotonicityInfo {
    double explicit_bound = 0.0;   // worst over slices
    std::size_t negative_weights = 0;
    double most_negative_weight = 0.0;
    bool monotone = true;
};

} // namespace switchvi
