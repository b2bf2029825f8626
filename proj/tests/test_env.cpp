#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <numeric>
#include <set>

#include "mpmab/env.hpp"
#include "mpmab/io.hpp"
#include "oracles.hpp"

using namespace mpmab;

namespace {

MpmabInstance three_arm_instance() {
    return MpmabInstance(2, 3, 0.1, {0.9, 0.6, 0.2, 0.85, 0.62, 0.25});
}

std::set<int> as_set(const std::vector<ArmId>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST(ValidateInstance, SinglePlayerIsVacuouslySimilar) {
    EXPECT_TRUE(validate_instance(MpmabInstance(1, 2, 0.0, {0.3, 0.7})).ok());
}

TEST(ValidateInstance, ReportsDissimilarityViolation) {
    const auto r = validate_instance(MpmabInstance(2, 1, 0.1, {0.5, 0.65}));
    ASSERT_EQ(r.violations.size(), 1u);
    EXPECT_EQ(r.violations[0].kind, Violation::Kind::Dissimilarity);
    EXPECT_EQ(r.violations[0].arm, 0);
    EXPECT_NEAR(r.violations[0].amount, 0.15, 1e-12);
}

TEST(ValidateInstance, AcceptsCloseMeans) { EXPECT_TRUE(validate_instance(three_arm_instance()).ok()); }

TEST(ValidateInstance, ReportsEveryOutOfRangeMean) {
    const auto r = validate_instance(MpmabInstance(1, 3, 0.0, {-0.1, 0.5, 1.2}));
    ASSERT_EQ(r.violations.size(), 2u);
    EXPECT_EQ(r.violations[0].kind, Violation::Kind::MeanOutOfRange);
    EXPECT_EQ(r.violations[1].arm, 2);
}

TEST(ValidateInstance, DimensionMismatchRejected) {
    EXPECT_THROW(MpmabInstance(2, 2, 0.1, {0.1, 0.2, 0.3}), std::invalid_argument);
}

TEST(ComputeGaps, MatchesHandExample) {
    const auto g = compute_gaps(three_arm_instance());
    const double want[2][3] = {{0.0, 0.3, 0.7}, {0.0, 0.23, 0.6}};
    for (int p = 0; p < 2; ++p)
        for (int i = 0; i < 3; ++i) EXPECT_NEAR(g.gap(p, i), want[p][i], 1e-12);
    EXPECT_NEAR(g.gap_min[0], 0.0, 1e-12);
    EXPECT_NEAR(g.gap_min[1], 0.23, 1e-12);
    EXPECT_NEAR(g.gap_min[2], 0.6, 1e-12);
}

TEST(ComputeGaps, ConstantMatrixHasZeroGaps) {
    const auto g = compute_gaps(MpmabInstance(3, 4, 0.0, std::vector<double>(12, 0.4)));
    for (double d : g.gaps) EXPECT_EQ(d, 0.0);
}

TEST(ComputeGaps, ExtremeMeans) {
    const auto g = compute_gaps(MpmabInstance(1, 2, 0.0, {1.0, 0.0}));
    EXPECT_EQ(g.gap(0, 0), 0.0);
    EXPECT_EQ(g.gap(0, 1), 1.0);
    EXPECT_EQ(g.gap_min[1], 1.0);
}

TEST(SubparSet, HandExamples) {
    const auto g = compute_gaps(three_arm_instance());
    EXPECT_EQ(as_set(subpar_set(g, 0.5)), (std::set<int>{2}));
    EXPECT_EQ(as_set(subpar_set(g, 0.25)), (std::set<int>{1, 2}));
    EXPECT_TRUE(subpar_set(g, 1.0).empty());
    EXPECT_THROW(subpar_set(g, -0.1), std::invalid_argument);
}

TEST(CategorizePull, HandExamples) {
    const auto g = compute_gaps(three_arm_instance());
    const auto sp = subpar_set(g, 0.5);
    EXPECT_EQ(categorize_pull(g, sp, 0, 0), ArmCategory::Optimal);
    EXPECT_EQ(categorize_pull(g, sp, 0, 2), ArmCategory::Subpar);
    EXPECT_EQ(categorize_pull(g, sp, 1, 1), ArmCategory::NearOptimal);

    const CategoryTable table(g, sp);
    for (int p = 0; p < 2; ++p)
        for (int i = 0; i < 3; ++i) EXPECT_EQ(table(p, i), categorize_pull(g, sp, p, i));
}

TEST(SampleReward, DegenerateMeans) {
    MpmabInstance inst(1, 2, 0.0, {1.0, 0.0});
    CounterRng rng(7);
    for (int k = 0; k < 1000; ++k) {
        EXPECT_EQ(sample_reward(inst, 0, 0, rng), 1.0);
        EXPECT_EQ(sample_reward(inst, 0, 1, rng), 0.0);
    }
}

TEST(SampleReward, EmpiricalMeanWithinThreeSigma) {
    MpmabInstance inst(1, 1, 0.0, {0.6});
    CounterRng rng(11);
    double sum = 0.0;
    const int n = 100000;
    for (int k = 0; k < n; ++k) sum += sample_reward(inst, 0, 0, rng);
    EXPECT_NEAR(sum / n, 0.6, 0.005);
}

TEST(SampleReward, ConsumesExactlyOneDraw) {
    MpmabInstance inst(1, 1, 0.0, {0.3});
    CounterRng rng(3);
    sample_reward(inst, 0, 0, rng);
    sample_reward(inst, 0, 0, rng);
    EXPECT_EQ(rng.draws(), 2u);
}

TEST(GenerateInstance, PaperSetupHitsTargetExactly) {
    for (int v = 0; v <= 9; ++v) {
        const auto inst = generate_instance(20, 10, 0.15, v, 1000 + v);
        EXPECT_TRUE(validate_instance(inst).ok());
        EXPECT_EQ(static_cast<int>(subpar_set(compute_gaps(inst), 0.75).size()), v) << "v=" << v;
    }
}

TEST(GenerateInstance, NoSubparArmsWhenVIsZero) {
    const auto g = compute_gaps(generate_instance(20, 10, 0.15, 0, 5));
    for (double d : g.gaps) EXPECT_LE(d, 0.75);
}

TEST(GenerateInstance, AllButOneSubparWhenVIsMax) {
    const auto g = compute_gaps(generate_instance(20, 10, 0.15, 9, 5));
    const auto sp = subpar_set(g, 0.75);
    EXPECT_EQ(sp.size(), 9u);
    const auto missing = 45 - std::accumulate(sp.begin(), sp.end(), 0);
    for (int p = 0; p < 20; ++p) EXPECT_EQ(g.gap(p, missing), 0.0);
}

TEST(GenerateInstance, DeterministicGivenSeed) {
    EXPECT_EQ(generate_instance(20, 10, 0.15, 4, 99), generate_instance(20, 10, 0.15, 4, 99));
    EXPECT_NE(generate_instance(20, 10, 0.15, 4, 99).means, generate_instance(20, 10, 0.15, 4, 100).means);
}

TEST(GenerateInstance, InfeasibleParameters) {
    EXPECT_THROW(generate_instance(5, 4, 0.3, 2, 1), InfeasibleParameters);  // subpar band empty
    EXPECT_THROW(generate_instance(5, 4, 0.0, 1, 1), InfeasibleParameters);  // near-optimal band empty
    EXPECT_THROW(generate_instance(5, 4, 0.1, 4, 1), InfeasibleParameters);  // v > K-1
    EXPECT_NO_THROW(generate_instance(5, 4, 0.0, 3, 1));
}

// Properties of subpar arms on generated instances.
TEST(GenerateInstance, SubparArmProperties) {
    for (int seed = 0; seed < 200; ++seed) {
        const int v = seed % 10;
        const auto inst = generate_instance(20, 10, 0.15, v, 7000 + seed);
        const double eps = inst.epsilon;
        const auto g = compute_gaps(inst);
        for (int i = 0; i < 10; ++i)
            for (int p = 0; p < 20; ++p)
                for (int q = 0; q < 20; ++q) ASSERT_LE(std::abs(g.gap(p, i) - g.gap(q, i)), 2 * eps + 1e-12);
        for (int i : subpar_set(g, 10 * eps))
            for (int p = 0; p < 20; ++p) ASSERT_GT(g.gap(p, i), 8 * eps);
        ASSERT_GE(10 - static_cast<int>(subpar_set(g, 2 * eps).size()), 1);
        for (int i : subpar_set(g, 5 * eps)) ASSERT_LE(g.gap_max[i], 2 * g.gap_min[i] + 1e-12);
    }
}

TEST(SubparSet, MonotoneInAlpha) {
    const auto g = compute_gaps(generate_instance(8, 6, 0.1, 3, 17));
    for (double a = 0.0; a < 1.0; a += 0.05) {
        const auto small = as_set(subpar_set(g, a));
        for (int i : subpar_set(g, a + 0.05)) EXPECT_TRUE(small.count(i));
    }
}

TEST(SubparSet, MatchesBruteForceOnRandomInstances) {
    CounterRng rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        const int M = 1 + static_cast<int>(uniform01(rng) * 4);
        const int K = 1 + static_cast<int>(uniform01(rng) * 5);
        oracle::Matrix mu(M, std::vector<double>(K));
        std::vector<double> flat;
        for (auto& row : mu)
            for (auto& m : row) {
                m = uniform01(rng);
                flat.push_back(m);
            }
        const MpmabInstance inst(M, K, 1.0, flat);
        const auto g = compute_gaps(inst);
        const auto want = oracle::gaps(mu);
        for (int p = 0; p < M; ++p)
            for (int i = 0; i < K; ++i) ASSERT_EQ(g.gap(p, i), want[p][i]);
        const double alpha = uniform01(rng);
        ASSERT_EQ(as_set(subpar_set(g, alpha)), oracle::subpar(want, alpha));
    }
}

TEST(InstanceJson, RoundTripsBitExactly) {
    for (int v : {0, 4, 9}) {
        const auto inst = generate_instance(20, 10, 0.15, v, 31337 + v);
        const auto back = instance_from_json(json::parse(instance_to_json(inst).dump()));
        EXPECT_EQ(back, inst);
        for (std::size_t k = 0; k < inst.means.size(); ++k)
            EXPECT_EQ(std::memcmp(&back.means[k], &inst.means[k], sizeof(double)), 0);
    }
}

TEST(InstanceJson, SaveLoadFile) {
    const auto inst = generate_instance(4, 5, 0.1, 2, 8);
    const auto path = (std::filesystem::temp_directory_path() / "mpmab_instance_test.json").string();
    save_instance(path, inst);
    EXPECT_EQ(load_instance(path), inst);
    std::filesystem::remove(path);
}

TEST(InstanceJson, RejectsUnknownFamily) {
    auto j = instance_to_json(three_arm_instance());
    j["family"] = "gaussian";
    EXPECT_THROW(instance_from_json(j), std::invalid_argument);
}
