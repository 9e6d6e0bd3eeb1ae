#include "shiftlab/instances.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <type_traits>

#include "shiftlab/errors.hpp"

namespace shiftlab {

std::string_view to_string(Scenario s) noexcept {
    return s == Scenario::LabelShift ? "label_shift" : "group_shift";
}

Scenario scenario_from_string(std::string_view name) {
    if (name == "label_shift") return Scenario::LabelShift;
    if (name == "group_shift") return Scenario::GroupShift;
    throw InvalidParameter("unknown scenario '" + std::string(name) + "'");
}

void LabelShiftIndex::validate() const {
    if (v1.empty() || v1.size() != vm1.size()) {
        throw InvalidParameter("label-shift index needs two trit vectors of equal length >= 1");
    }
    for (const auto* vec : {&v1, &vm1}) {
        for (int t : *vec) {
            if (t < -1 || t > 1) throw InvalidParameter("label-shift index entries must be in {-1, 0, 1}");
        }
    }
}

void GroupShiftIndex::validate() const {
    if (v.empty()) throw InvalidParameter("group-shift index needs at least one sign");
    for (int s : v) {
        if (s != -1 && s != 1) throw InvalidParameter("group-shift index entries must be in {-1, 1}");
    }
    if (!(tau >= 0.0 && tau <= 1.0)) throw InvalidParameter("tau must lie in [0, 1]");
}

ShiftInstance::ShiftInstance(Scenario kind, Density p_maj, Density p_min, std::optional<PiecewiseLinearFn> eta)
    : kind_(kind),
      p_maj_(std::move(p_maj)),
      p_min_(std::move(p_min)),
      eta_(std::move(eta)),
      test_marginal_(PiecewiseLinearFn::combine(0.5, p_maj_.shape(), 0.5, p_min_.shape())) {}

ShiftInstance ShiftInstance::label_shift(Density p1, Density pm1) {
    for (const Density* d : {&p1, &pm1}) {
        if (lipschitz_constant(d->shape()).constant > 1.0 + kLipschitzSlack) {
            throw InvalidParameter("label-shift class-conditional densities must be 1-Lipschitz");
        }
    }
    return ShiftInstance(Scenario::LabelShift, std::move(p1), std::move(pm1), std::nullopt);
}

ShiftInstance ShiftInstance::group_shift(Density pa, Density pb, PiecewiseLinearFn eta) {
    if (eta.front() != 0.0 || eta.back() != 1.0) throw InvalidParameter("eta must be defined on [0, 1]");
    for (double y : eta.values()) {
        if (y < 0.0 || y > 1.0) throw InvalidParameter("eta must take values in [0, 1]");
    }
    if (lipschitz_constant(eta).constant > 1.0 + kLipschitzSlack) {
        throw InvalidParameter("eta must be 1-Lipschitz");
    }
    return ShiftInstance(Scenario::GroupShift, std::move(pa), std::move(pb), std::move(eta));
}

const PiecewiseLinearFn& ShiftInstance::eta() const {
    if (!eta_) throw WrongScenario("eta is only defined for group-shift instances");
    return *eta_;
}

ShiftInstance make_label_shift_hard(const LabelShiftIndex& index) {
    index.validate();
    return ShiftInstance::label_shift(Density(hat_perturbation(index.v1, 1.0, 1.0)),
                                      Density(hat_perturbation(index.vm1, 1.0, 1.0)));
}

ShiftInstance make_group_shift_hard(const GroupShiftIndex& index) {
    index.validate();
    const double tau = index.tau;
    return ShiftInstance::group_shift(Density::step(2.0 - tau, tau), Density::step(tau, 2.0 - tau),
                                      hat_perturbation(index.v, 0.5, 0.5));
}

ShiftInstance make_hard_instance(const FamilyIndex& index) {
    return std::visit([](const auto& idx) {
        using T = std::decay_t<decltype(idx)>;
        if constexpr (std::is_same_v<T, LabelShiftIndex>) {
            return make_label_shift_hard(idx);
        } else {
            return make_group_shift_hard(idx);
        }
    }, index);
}

LabelShiftIndex random_label_shift_index(int K, Rng& rng) {
    if (K < 1) throw InvalidParameter("family size K must be >= 1");
    LabelShiftIndex idx;
    idx.v1.resize(static_cast<std::size_t>(K));
    idx.vm1.resize(static_cast<std::size_t>(K));
    for (int& t : idx.v1) t = static_cast<int>(rng.below(3)) - 1;
    for (int& t : idx.vm1) t = static_cast<int>(rng.below(3)) - 1;
    return idx;
}

GroupShiftIndex random_group_shift_index(int K, double tau, Rng& rng) {
    if (K < 1) throw InvalidParameter("family size K must be >= 1");
    GroupShiftIndex idx;
    idx.tau = tau;
    idx.v.resize(static_cast<std::size_t>(K));
    for (int& s : idx.v) s = rng.below(2) == 0 ? -1 : 1;
    idx.validate();
    return idx;
}

FamilyIndex random_index(Scenario kind, int K, double tau, Rng& rng) {
    if (kind == Scenario::LabelShift) return random_label_shift_index(K, rng);
    return random_group_shift_index(K, tau, rng);
}

void Dataset::validate() const {
    std::size_t maj = 0;
    for (const Sample& s : samples) {
        if (s.group == Group::Majority) ++maj;
    }
    if (maj != n_maj || samples.size() - maj != n_min) {
        throw InvalidParameter("dataset group counts disagree with sample tags");
    }
}

Dataset draw_dataset(const ShiftInstance& instance, std::size_t n_maj, std::size_t n_min, Rng& rng) {
    if (n_maj < n_min) throw InvalidParameter("draw_dataset requires n_maj >= n_min");
    Dataset data;
    data.n_maj = n_maj;
    data.n_min = n_min;
    data.samples.reserve(n_maj + n_min);
    auto draw_group = [&](const Density& marginal, std::size_t count, Group group, int fixed_label) {
        for (std::size_t i = 0; i < count; ++i) {
            Sample s;
            s.x = sample(marginal, rng);
            s.group = group;
            if (instance.kind() == Scenario::LabelShift) {
                s.y = fixed_label;
            } else {
                s.y = rng.uniform() < instance.eta()(s.x) ? 1 : -1;
            }
            data.samples.push_back(s);
        }
    };
    draw_group(instance.p_maj(), n_maj, Group::Majority, 1);
    draw_group(instance.p_min(), n_min, Group::Minority, -1);
    return data;
}

Dataset undersample(const Dataset& data, Rng& rng) {
    if (data.n_min > data.n_maj) {
        throw InvalidParameter("undersample requires n_min <= n_maj (got n_min=" + std::to_string(data.n_min) +
                               ", n_maj=" + std::to_string(data.n_maj) + ")");
    }
    std::vector<Sample> majority;
    std::vector<Sample> minority;
    majority.reserve(data.n_maj);
    minority.reserve(data.n_min);
    for (const Sample& s : data.samples) {
        (s.group == Group::Majority ? majority : minority).push_back(s);
    }
    std::sort(majority.begin(), majority.end(),
              [](const Sample& a, const Sample& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });

    // Partial Fisher-Yates over positions; the first n_min slots end up a uniform subset.
    std::vector<std::size_t> pos(majority.size());
    std::iota(pos.begin(), pos.end(), std::size_t{0});
    const std::size_t keep = minority.size();
    for (std::size_t i = 0; i < keep; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(pos.size() - i));
        std::swap(pos[i], pos[j]);
    }
    std::sort(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(keep));

    Dataset out;
    out.n_maj = keep;
    out.n_min = keep;
    out.samples.reserve(2 * keep);
    for (std::size_t i = 0; i < keep; ++i) out.samples.push_back(majority[pos[i]]);
    out.samples.insert(out.samples.end(), minority.begin(), minority.end());
    return out;
}

}  // namespace shiftlab
