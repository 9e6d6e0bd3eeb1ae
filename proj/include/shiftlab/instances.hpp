#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "shiftlab/density.hpp"
#include "shiftlab/piecewise_linear.hpp"
#include "shiftlab/rng.hpp"

namespace shiftlab {

enum class Scenario { LabelShift, GroupShift };

std::string_view to_string(Scenario s) noexcept;
Scenario scenario_from_string(std::string_view name);

enum class Group { Majority, Minority };

// Index of the hard label-shift family: one trit in {-1, 0, +1} per bin for
// each class-conditional.
struct LabelShiftIndex {
    std::vector<int> v1;
    std::vector<int> vm1;

    int bins() const noexcept { return static_cast<int>(v1.size()); }
    void validate() const;
};

// Index of the hard group-shift family: one sign per bin plus the overlap level.
struct GroupShiftIndex {
    std::vector<int> v;
    double tau = 0.0;

    int bins() const noexcept { return static_cast<int>(v.size()); }
    void validate() const;
};

using FamilyIndex = std::variant<LabelShiftIndex, GroupShiftIndex>;

// A (P_maj, P_min) pair with a balanced test mixture.
//
// Label shift: majority draws x ~ P_1 with y = +1, minority draws x ~ P_-1 with y = -1.
// Group shift: majority x ~ P_a, minority x ~ P_b, both labelled by the shared eta(x) = P(y = 1 | x).
class ShiftInstance {
public:
    static constexpr double kLipschitzSlack = 1e-12;

    static ShiftInstance label_shift(Density p1, Density pm1);
    static ShiftInstance group_shift(Density pa, Density pb, PiecewiseLinearFn eta);

    Scenario kind() const noexcept { return kind_; }
    const Density& p_maj() const noexcept { return p_maj_; }
    const Density& p_min() const noexcept { return p_min_; }
    // Group shift only.
    const PiecewiseLinearFn& eta() const;
    // (P_maj + P_min) / 2 as a function of x.
    const PiecewiseLinearFn& test_marginal() const noexcept { return test_marginal_; }

private:
    ShiftInstance(Scenario kind, Density p_maj, Density p_min, std::optional<PiecewiseLinearFn> eta);

    Scenario kind_;
    Density p_maj_;
    Density p_min_;
    std::optional<PiecewiseLinearFn> eta_;
    PiecewiseLinearFn test_marginal_;
};

ShiftInstance make_label_shift_hard(const LabelShiftIndex& index);
ShiftInstance make_group_shift_hard(const GroupShiftIndex& index);
ShiftInstance make_hard_instance(const FamilyIndex& index);

// Uniform draw over {-1,0,1}^K x {-1,0,1}^K (label shift) or {-1,1}^K (group shift).
LabelShiftIndex random_label_shift_index(int K, Rng& rng);
GroupShiftIndex random_group_shift_index(int K, double tau, Rng& rng);
FamilyIndex random_index(Scenario kind, int K, double tau, Rng& rng);

struct Sample {
    double x = 0.0;
    int y = 1;  // -1 or +1
    Group group = Group::Majority;

    friend bool operator==(const Sample&, const Sample&) = default;
};

struct Dataset {
    std::vector<Sample> samples;
    std::size_t n_maj = 0;
    std::size_t n_min = 0;

    // Counts must agree with the group tags.
    void validate() const;
};

// n_maj draws from P_maj then n_min draws from P_min. Requires n_maj >= n_min.
Dataset draw_dataset(const ShiftInstance& instance, std::size_t n_maj, std::size_t n_min, Rng& rng);

// All minority samples plus n_min majority samples chosen uniformly without
// replacement. Majority candidates are put in (x, y) order before selection, so the
// result depends on the majority samples only as a multiset. Output lists the chosen
// majority samples in that order, then the minority samples in input order.
Dataset undersample(const Dataset& data, Rng& rng);

}  // namespace shiftlab
