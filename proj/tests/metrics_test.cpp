#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include <ctsim/metrics.hpp>

namespace ctsim {
namespace {

RunOutcome outcome_with(std::size_t members, std::vector<Event> events, int horizon_days = 1)
{
    RunOutcome o;
    o.members.resize(members);
    for (std::size_t k = 0; k < members; ++k) {
        o.members[k] = k;
    }
    o.events = std::move(events);
    o.horizon_days = horizon_days;
    o.hourly = hourly_counts(o.events, members, horizon_days);
    return o;
}

Event infected(std::uint32_t p, double t) { return {EventKind::Infected, p, t, std::nullopt}; }
Event symptomatic(std::uint32_t p, double t) { return {EventKind::Symptomatic, p, t, std::nullopt}; }

Observation two_people(Vec2 a, Vec2 fa, Vec2 b, Vec2 fb, std::int64_t seconds)
{
    Observation obs;
    obs.class_id = "M";
    obs.room_area = 30;
    obs.roster = {{"a", Role::Child}, {"b", Role::Teacher}};
    for (std::int64_t t = 0; t < seconds; ++t) {
        obs.frames.push_back({t, {{true, a, fa}, {true, b, fb}}});
    }
    return obs;
}

TEST(Saturation, Cases)
{
    EXPECT_DOUBLE_EQ(saturation(outcome_with(10, {infected(0, -86400)})), 0.1);
    EXPECT_DOUBLE_EQ(saturation(outcome_with(4, {infected(0, 0), infected(1, 5), infected(2, 9), infected(3, 9)})), 1.0);
    EXPECT_DOUBLE_EQ(saturation(outcome_with(4, {})), 0.0);
}

TEST(Likelihood, ConstantGeometry)
{
    const KernelParams kp;
    const auto obs = two_people({0, 0}, {1, 0}, {2, 0}, {-1, 0}, 100);
    const auto tl = transmission_likelihood(obs, kp, 20);
    EXPECT_NEAR(tl.beta_hat, kp.beta_max * std::exp(-0.5), 1e-18);
    EXPECT_EQ(tl.exposure_T, 2000.0);
    EXPECT_NEAR(tl.product, tl.beta_hat * 2000.0, 1e-15);
}

TEST(Likelihood, FarApartIsNegligible)
{
    const KernelParams kp;
    const auto obs = two_people({0, 0}, {1, 0}, {100, 0}, {1, 0}, 10);
    EXPECT_LT(transmission_likelihood(obs, kp, 1).beta_hat, 1e-300);
}

TEST(Likelihood, SinglePersonThrows)
{
    Observation obs;
    obs.roster = {{"a", Role::Child}};
    obs.frames.push_back({0, {{true, {0, 0}, {1, 0}}}});
    EXPECT_THROW(transmission_likelihood(obs, KernelParams{}, 1), SinglePerson);
}

TEST(Likelihood, TableMatchesBruteForceWithAbsences)
{
    Observation obs;
    obs.class_id = "B";
    obs.room_area = 9;
    obs.roster = {{"a", Role::Child}, {"b", Role::Child}, {"c", Role::Teacher}};
    Rng rng(6);
    double manual = 0;
    std::size_t samples = 0;
    const KernelParams kp;
    for (std::int64_t t = 0; t < 300; ++t) {
        TrajectoryFrame f{t, {}};
        for (int k = 0; k < 3; ++k) {
            f.poses.push_back(rng.bernoulli(0.2) ? Pose::absent()
                                                 : Pose{true, {rng.uniform(0, 3), rng.uniform(0, 3)},
                                                        unit_from_heading(rng.uniform(-3, 3))});
        }
        for (int a = 0; a < 3; ++a) {
            for (int b = a + 1; b < 3; ++b) {
                if (f.poses[a].present && f.poses[b].present) {
                    manual += pair_rate(clamped_geometry(f.poses[a].pos, f.poses[a].facing, f.poses[b].pos,
                                                          f.poses[b].facing),
                                        kp);
                    ++samples;
                }
            }
        }
        obs.frames.push_back(std::move(f));
    }
    const auto brute = transmission_likelihood(obs, kp, 5);
    EXPECT_NEAR(brute.beta_hat, manual / static_cast<double>(samples), 1e-12 * brute.beta_hat);
    const ReplayContext ctx(obs, kp, DiseaseParams{});
    const std::vector<std::size_t> all{0, 1, 2};
    EXPECT_NEAR(transmission_likelihood(ctx, all, 5).beta_hat, brute.beta_hat, 1e-12 * brute.beta_hat);
}

TEST(Emergence, NthSymptomatic)
{
    const auto o = outcome_with(5, {symptomatic(0, 86400), symptomatic(3, 3 * 86400), symptomatic(1, 2 * 86400)});
    EXPECT_DOUBLE_EQ(*nth_symptomatic(o, 1), 1.0);
    EXPECT_DOUBLE_EQ(*nth_symptomatic(o, 2), 2.0);
    EXPECT_DOUBLE_EQ(*nth_symptomatic(o, 3), 3.0);
    EXPECT_FALSE(nth_symptomatic(o, 4));
    EXPECT_THROW(nth_symptomatic(o, 0), InvalidParameter);
    EXPECT_EQ(first_symptomatic_person(o), 0u);
}

TEST(Emergence, Proportion)
{
    std::vector<RunOutcome> runs;
    runs.push_back(outcome_with(3, {symptomatic(0, 10), symptomatic(1, 20)}));
    runs.push_back(outcome_with(3, {symptomatic(0, 10)}));
    runs.push_back(outcome_with(3, {}));
    runs.push_back(outcome_with(3, {symptomatic(2, 86400), symptomatic(1, 2 * 86400)}));
    EXPECT_DOUBLE_EQ(emergence_proportion(runs, 1), 0.25);
    EXPECT_DOUBLE_EQ(emergence_proportion(runs, 2), 0.5);
    EXPECT_THROW(emergence_proportion(std::vector<RunOutcome>{}, 1), EmptyCollection);
    EXPECT_DOUBLE_EQ(*median_nth_symptomatic(runs, 2), 0.5 * (20.0 / 86400 + 2.0));
    EXPECT_FALSE(median_nth_symptomatic(runs, 3));
}

TEST(Hourly, TwoRunMoments)
{
    std::vector<RunOutcome> runs;
    runs.push_back(outcome_with(4, {}));
    runs.push_back(outcome_with(4, {infected(0, 0), infected(1, 0)}));
    const auto c = aggregate_hourly(runs);
    ASSERT_EQ(c.mean.size(), 24u);
    EXPECT_DOUBLE_EQ(c.infected_mean[0], 0.25);
    EXPECT_DOUBLE_EQ(c.infected_std[0], 0.25);
    EXPECT_DOUBLE_EQ(c.mean[0][0], 3.0);
    EXPECT_DOUBLE_EQ(c.std[0][0], 1.0);
    EXPECT_DOUBLE_EQ(c.mean[0][1], 1.0);
}

TEST(Hourly, CumulativeInfectedIsMonotone)
{
    std::vector<RunOutcome> runs;
    for (std::uint32_t r = 0; r < 5; ++r) {
        std::vector<Event> ev;
        for (std::uint32_t p = 0; p <= r; ++p) {
            const double t = p * 20000.0;
            ev.push_back(infected(p, t));
            ev.push_back({EventKind::Infectious, p, t + 86400, std::nullopt});
            ev.push_back({EventKind::Recovered, p, t + 3 * 86400, std::nullopt});
        }
        runs.push_back(outcome_with(6, ev, 5));
    }
    const auto c = aggregate_hourly(runs);
    for (std::size_t h = 1; h < c.infected_mean.size(); ++h) {
        EXPECT_GE(c.infected_mean[h], c.infected_mean[h - 1]);
    }
}

TEST(Hourly, MixedCohortsThrow)
{
    std::vector<RunOutcome> runs{outcome_with(4, {}), outcome_with(5, {})};
    EXPECT_THROW(aggregate_hourly(runs), MixedCohorts);
    std::vector<RunOutcome> horizons{outcome_with(4, {}, 1), outcome_with(4, {}, 2)};
    EXPECT_THROW(aggregate_hourly(horizons), MixedCohorts);
}

TEST(CompensatedSum, RecoversSmallTerms)
{
    CompensatedSum s;
    s.add(1e16);
    for (int k = 0; k < 1000; ++k) {
        s.add(1.0);
    }
    s.add(-1e16);
    EXPECT_EQ(s.value(), 1000.0);
}

TEST(Writers, SummaryRowFormat)
{
    auto o = outcome_with(2, {infected(0, -86400), symptomatic(0, 43200)});
    o.scenario = "full-novax";
    o.observation = "A";
    o.patient_zero_id = "c01";
    o.seed = 9;
    const auto s = summarize(o, {1e-5, 100, 1e-3});
    std::ostringstream out;
    write_summary_header(out);
    write_summary_row(out, s);
    EXPECT_EQ(out.str(), std::string(kSummaryHeader) + "\nfull-novax,A,c01,9,0.5,1.0000000000000001e-05,100,0.001,0.5,,\n");
}

} // namespace
} // namespace ctsim
