#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "shiftlab/density.hpp"
#include "shiftlab/errors.hpp"
#include "shiftlab/instances.hpp"
#include "shiftlab/rng.hpp"

using namespace shiftlab;

namespace {

void expect_valid(const ShiftInstance& inst) {
    for (const Density* d : {&inst.p_maj(), &inst.p_min()}) {
        EXPECT_NEAR(d->total_mass(), 1.0, 1e-12);
        for (double y : d->shape().values()) EXPECT_GE(y, 0.0);
        if (inst.kind() == Scenario::LabelShift) EXPECT_LE(lipschitz_constant(d->shape()).constant, 1.0 + 1e-12);
    }
    if (inst.kind() == Scenario::GroupShift) {
        for (double y : inst.eta().values()) {
            EXPECT_GE(y, 0.0);
            EXPECT_LE(y, 1.0);
        }
        EXPECT_LE(lipschitz_constant(inst.eta()).constant, 1.0 + 1e-12);
    }
}

bool sample_less(const Sample& a, const Sample& b) {
    return std::tie(a.x, a.y, a.group) < std::tie(b.x, b.y, b.group);
}

}  // namespace

TEST(LabelShiftFamily, ZeroIndexIsUniform) {
    const ShiftInstance inst = make_label_shift_hard({{0, 0, 0}, {0, 0, 0}});
    for (double x : {0.0, 0.1, 0.37, 0.5, 0.99, 1.0}) {
        EXPECT_EQ(inst.p_maj()(x), 1.0);
        EXPECT_EQ(inst.p_min()(x), 1.0);
    }
    EXPECT_THROW(inst.eta(), WrongScenario);
}

TEST(LabelShiftFamily, PerturbationMatchesBinCentres) {
    const LabelShiftIndex idx{{1, -1, 0, 1}, {-1, 0, 1, 1}};
    const ShiftInstance inst = make_label_shift_hard(idx);
    for (int j = 0; j < 4; ++j) {
        const double right_peak = (j + 0.5) / 4 + 1.0 / 16;
        EXPECT_NEAR(inst.p_maj()(right_peak), 1.0 + idx.v1[j] / 16.0, 1e-15);
        EXPECT_NEAR(inst.p_min()(right_peak), 1.0 + idx.vm1[j] / 16.0, 1e-15);
    }
}

TEST(LabelShiftFamily, RandomIndicesAreValid) {
    Rng rng(21);
    for (int trial = 0; trial < 200; ++trial) {
        const int K = 1 + static_cast<int>(rng.below(12));
        expect_valid(make_label_shift_hard(random_label_shift_index(K, rng)));
    }
}

TEST(LabelShiftFamily, RejectsSteepDensities) {
    const Density steep(PiecewiseLinearFn({0.0, 1.0}, {2.0, 0.0}));
    EXPECT_THROW(ShiftInstance::label_shift(steep, Density::uniform()), InvalidParameter);
}

TEST(LabelShiftFamily, RejectsBadIndex) {
    EXPECT_THROW(make_label_shift_hard({{2}, {0}}), InvalidParameter);
    EXPECT_THROW(make_label_shift_hard({{1, 0}, {0}}), InvalidParameter);
    EXPECT_THROW(make_label_shift_hard({{}, {}}), InvalidParameter);
}

TEST(GroupShiftFamily, FullOverlapGivesUniformMarginals) {
    const ShiftInstance inst = make_group_shift_hard({{1, -1}, 1.0});
    for (double y : inst.p_maj().shape().values()) EXPECT_EQ(y, 1.0);
    for (double y : inst.p_min().shape().values()) EXPECT_EQ(y, 1.0);
}

TEST(GroupShiftFamily, EtaDeviationPeaksAtQuarterBin) {
    Rng rng(22);
    for (int trial = 0; trial < 20; ++trial) {
        const ShiftInstance inst = make_group_shift_hard(random_group_shift_index(4, 0.4, rng));
        double dev = 0.0;
        for (double y : inst.eta().values()) dev = std::max(dev, std::abs(y - 0.5));
        EXPECT_NEAR(dev, 1.0 / 32, 1e-15);
    }
}

TEST(GroupShiftFamily, OverlapEqualsTau) {
    for (int i = 0; i <= 10; ++i) {
        const double tau = i / 10.0;
        const ShiftInstance inst = make_group_shift_hard({{1, -1, 1}, tau});
        EXPECT_NEAR(overlap(inst.p_maj(), inst.p_min()), tau, 1e-9);
        expect_valid(inst);
    }
}

TEST(GroupShiftFamily, ZeroOverlapHasDisjointSupports) {
    const ShiftInstance inst = make_group_shift_hard({{1}, 0.0});
    EXPECT_EQ(inst.p_maj()(0.75), 0.0);
    EXPECT_EQ(inst.p_min()(0.25), 0.0);
    EXPECT_NEAR(integrate(inst.p_maj().shape(), 0.5, 1.0), 0.0, 1e-9);
}

TEST(GroupShiftFamily, RejectsBadIndex) {
    EXPECT_THROW(make_group_shift_hard({{0}, 0.5}), InvalidParameter);
    EXPECT_THROW(make_group_shift_hard({{1}, 1.5}), InvalidParameter);
    EXPECT_THROW(make_group_shift_hard({{}, 0.5}), InvalidParameter);
}

TEST(GeneralInstances, GroupShiftValidation) {
    const Density u = Density::uniform();
    EXPECT_THROW(ShiftInstance::group_shift(u, u, PiecewiseLinearFn({0.0, 1.0}, {-0.1, 0.5})), InvalidParameter);
    EXPECT_THROW(ShiftInstance::group_shift(u, u, PiecewiseLinearFn({0.0, 0.1, 1.0}, {0.0, 0.5, 0.5})),
                 InvalidParameter);
    EXPECT_NO_THROW(ShiftInstance::group_shift(u, u, PiecewiseLinearFn({0.0, 1.0}, {0.2, 0.8})));
}

TEST(RandomIndex, LabelShiftNineOutcomesAreEquiprobable) {
    Rng rng(23);
    const int n = 100000;
    std::map<std::pair<int, int>, int> counts;
    for (int i = 0; i < n; ++i) {
        const auto idx = random_label_shift_index(1, rng);
        ++counts[{idx.v1[0], idx.vm1[0]}];
    }
    ASSERT_EQ(counts.size(), 9u);
    const double expected = n / 9.0;
    double chi2 = 0.0;
    for (const auto& [_, c] : counts) chi2 += (c - expected) * (c - expected) / expected;
    EXPECT_LT(chi2, 20.090);  // 1% critical value, 8 degrees of freedom
}

TEST(RandomIndex, GroupShiftTwoOutcomes) {
    Rng rng(24);
    int plus = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) plus += random_group_shift_index(1, 0.2, rng).v[0] == 1;
    EXPECT_NEAR(plus, n / 2, 3 * std::sqrt(n / 4.0) + 1);
}

TEST(RandomIndex, DeterministicGivenSeed) {
    Rng a(5), b(5);
    const auto ia = std::get<LabelShiftIndex>(random_index(Scenario::LabelShift, 6, 0.0, a));
    const auto ib = std::get<LabelShiftIndex>(random_index(Scenario::LabelShift, 6, 0.0, b));
    EXPECT_EQ(ia.v1, ib.v1);
    EXPECT_EQ(ia.vm1, ib.vm1);
}

TEST(DrawDataset, EmptyAndCounts) {
    Rng rng(25);
    const ShiftInstance inst = make_label_shift_hard({{1}, {-1}});
    const Dataset empty = draw_dataset(inst, 0, 0, rng);
    EXPECT_TRUE(empty.samples.empty());
    for (auto [nmaj, nmin] : {std::pair<std::size_t, std::size_t>{7, 3}, {10, 10}, {5, 0}}) {
        const Dataset d = draw_dataset(inst, nmaj, nmin, rng);
        EXPECT_EQ(d.n_maj, nmaj);
        EXPECT_EQ(d.n_min, nmin);
        EXPECT_EQ(d.samples.size(), nmaj + nmin);
        EXPECT_EQ(static_cast<std::size_t>(std::count_if(d.samples.begin(), d.samples.end(),
                                                         [](const Sample& s) { return s.group == Group::Majority; })),
                  nmaj);
    }
    EXPECT_THROW(draw_dataset(inst, 2, 3, rng), InvalidParameter);
}

TEST(DrawDataset, LabelShiftLabelsFollowGroups) {
    Rng rng(26);
    const Dataset d = draw_dataset(make_label_shift_hard({{1, 0}, {-1, 1}}), 50, 20, rng);
    for (const Sample& s : d.samples) {
        EXPECT_EQ(s.y, s.group == Group::Majority ? 1 : -1);
        EXPECT_GE(s.x, 0.0);
        EXPECT_LE(s.x, 1.0);
    }
}

TEST(DrawDataset, DegenerateEtaGivesAllPositive) {
    Rng rng(27);
    const Density u = Density::uniform();
    const ShiftInstance inst = ShiftInstance::group_shift(u, u, PiecewiseLinearFn::constant(1.0));
    const Dataset d = draw_dataset(inst, 40, 40, rng);
    for (const Sample& s : d.samples) EXPECT_EQ(s.y, 1);
}

TEST(DrawDataset, HardInstanceBinFrequencies) {
    Rng rng(28);
    const int K = 8, n = 100000;
    const ShiftInstance inst = make_label_shift_hard(random_label_shift_index(K, rng));
    const Dataset d = draw_dataset(inst, n, 0, rng);
    std::vector<int> counts(K, 0);
    for (const Sample& s : d.samples) ++counts[std::min(K - 1, static_cast<int>(s.x * K))];
    const double expected = static_cast<double>(n) / K;
    double chi2 = 0.0;
    for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
    EXPECT_LT(chi2, 18.475);  // 1% critical value, 7 degrees of freedom
}

TEST(Undersample, SizesAndMembership) {
    Rng rng(29);
    const Dataset d = draw_dataset(make_label_shift_hard({{1}, {1}}), 5, 2, rng);
    const Dataset us = undersample(d, rng);
    EXPECT_EQ(us.samples.size(), 4u);
    EXPECT_EQ(us.n_maj, 2u);
    EXPECT_EQ(us.n_min, 2u);
    for (const Sample& s : us.samples) {
        EXPECT_NE(std::find(d.samples.begin(), d.samples.end(), s), d.samples.end());
    }
}

TEST(Undersample, BalancedInputIsUnchangedAsMultiset) {
    Rng rng(30);
    const Dataset d = draw_dataset(make_group_shift_hard({{1, -1}, 0.3}), 6, 6, rng);
    Dataset us = undersample(d, rng);
    auto a = d.samples, b = us.samples;
    std::sort(a.begin(), a.end(), sample_less);
    std::sort(b.begin(), b.end(), sample_less);
    EXPECT_EQ(a, b);
}

TEST(Undersample, PreservesMinorityAndNeverDuplicates) {
    Rng rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t nmin = 1 + rng.below(10), nmaj = nmin + rng.below(30);
        const Dataset d = draw_dataset(make_group_shift_hard({{1, 1, -1}, 0.5}), nmaj, nmin, rng);
        const Dataset us = undersample(d, rng);
        std::vector<Sample> min_in, min_out, maj_out;
        for (const Sample& s : d.samples) if (s.group == Group::Minority) min_in.push_back(s);
        for (const Sample& s : us.samples) (s.group == Group::Minority ? min_out : maj_out).push_back(s);
        std::sort(min_in.begin(), min_in.end(), sample_less);
        std::sort(min_out.begin(), min_out.end(), sample_less);
        EXPECT_EQ(min_in, min_out);
        std::sort(maj_out.begin(), maj_out.end(), sample_less);
        EXPECT_EQ(std::adjacent_find(maj_out.begin(), maj_out.end()), maj_out.end());
        EXPECT_EQ(maj_out.size(), nmin);
    }
}

TEST(Undersample, InclusionFrequencyIsHypergeometric) {
    Rng rng(32);
    const Dataset d = draw_dataset(make_label_shift_hard({{0}, {0}}), 4, 2, rng);
    std::vector<int> hits(4, 0);
    const int reps = 10000;
    for (int r = 0; r < reps; ++r) {
        const Dataset us = undersample(d, rng);
        for (int i = 0; i < 4; ++i) hits[i] += std::count(us.samples.begin(), us.samples.end(), d.samples[i]) > 0;
    }
    const double se = std::sqrt(0.25 / reps);
    for (int h : hits) EXPECT_NEAR(static_cast<double>(h) / reps, 0.5, 3 * se);
}

TEST(Undersample, RejectsMinorityLargerThanMajority) {
    Dataset d;
    d.samples = {{0.1, 1, Group::Majority}, {0.2, -1, Group::Minority}, {0.3, -1, Group::Minority}};
    d.n_maj = 1;
    d.n_min = 2;
    Rng rng(33);
    EXPECT_THROW(undersample(d, rng), InvalidParameter);
}
