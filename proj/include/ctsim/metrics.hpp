#ifndef CTSIM_METRICS_HPP
#define CTSIM_METRICS_HPP

// Policy outcomes computed from run outcomes: saturation, transmission
// likelihood, symptomatic emergence and hourly compartment curves, plus the
// CSV writers for them.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <fmt/format.h>

#include <ctsim/epidemic.hpp>
#include <ctsim/error.hpp>
#include <ctsim/kernel.hpp>
#include <ctsim/scenario.hpp>
#include <ctsim/trajectory.hpp>

namespace ctsim {

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double x) noexcept
    {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }

    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Fraction of the simulated roster ever infected, patient zero included.
inline double saturation(const RunOutcome &outcome)
{
    if (outcome.members.empty()) {
        return 0.0;
    }
    const auto infected = std::count_if(outcome.events.begin(), outcome.events.end(),
                                        [](const Event &e) { return e.kind == EventKind::Infected; });
    return static_cast<double>(infected) / static_cast<double>(outcome.members.size());
}

struct TransmissionLikelihood {
    double beta_hat = 0.0;   // mean pairwise rate, per second
    double exposure_T = 0.0; // total in-class seconds over the horizon
    double product = 0.0;    // beta_hat * T, dimensionless
};

namespace detail {

inline TransmissionLikelihood finish_likelihood(const CompensatedSum &sum, std::size_t samples,
                                                double session_length, std::size_t horizon_sessions)
{
    TransmissionLikelihood out;
    out.beta_hat = samples > 0 ? sum.value() / static_cast<double>(samples) : 0.0;
    out.exposure_T = session_length * static_cast<double>(horizon_sessions);
    out.product = out.beta_hat * out.exposure_T;
    return out;
}

} // namespace detail

/// Mean kernel rate over every unordered pair present together, over every
/// second of the session, and its product with the total exposure time.
inline TransmissionLikelihood transmission_likelihood(const Observation &obs, const KernelParams &kp,
                                                      std::size_t horizon_sessions)
{
    if (obs.roster.size() < 2) {
        throw SinglePerson("transmission likelihood needs at least two people");
    }
    CompensatedSum sum;
    std::size_t samples = 0;
    for (const auto &f : obs.frames) {
        for (std::size_t a = 0; a < f.poses.size(); ++a) {
            const auto &pa = f.poses[a];
            if (!pa.present) {
                continue;
            }
            for (std::size_t b = a + 1; b < f.poses.size(); ++b) {
                const auto &pb = f.poses[b];
                if (!pb.present) {
                    continue;
                }
                sum.add(pair_rate(clamped_geometry(pa.pos, pa.facing, pb.pos, pb.facing), kp));
                ++samples;
            }
        }
    }
    return detail::finish_likelihood(sum, samples, static_cast<double>(obs.session_length()), horizon_sessions);
}

/// Same quantity for a subset of the roster, read from a prepared pair-rate table.
inline TransmissionLikelihood transmission_likelihood(const ReplayContext &ctx, std::span<const std::size_t> members,
                                                      std::size_t horizon_sessions)
{
    if (members.size() < 2) {
        throw SinglePerson("transmission likelihood needs at least two people");
    }
    const auto &obs = ctx.observation();
    CompensatedSum sum;
    std::size_t samples = 0;
    for (std::size_t f = 0; f < obs.frames.size(); ++f) {
        const auto &poses = obs.frames[f].poses;
        for (std::size_t a = 0; a < members.size(); ++a) {
            if (!poses[members[a]].present) {
                continue;
            }
            for (std::size_t b = a + 1; b < members.size(); ++b) {
                if (!poses[members[b]].present) {
                    continue;
                }
                sum.add(ctx.table().rate(f, members[a], members[b]));
                ++samples;
            }
        }
    }
    return detail::finish_likelihood(sum, samples, static_cast<double>(obs.session_length()), horizon_sessions);
}

/// Days from Day 0 to the nth symptom onset; empty if fewer than n occurred.
inline std::optional<double> nth_symptomatic(const RunOutcome &outcome, std::size_t n)
{
    if (n < 1) {
        throw InvalidParameter("n must be at least 1");
    }
    std::vector<double> onsets;
    for (const auto &e : outcome.events) {
        if (e.kind == EventKind::Symptomatic) {
            onsets.push_back(e.t);
        }
    }
    if (onsets.size() < n) {
        return std::nullopt;
    }
    std::nth_element(onsets.begin(), onsets.begin() + static_cast<std::ptrdiff_t>(n - 1), onsets.end());
    return onsets[n - 1] / kSecondsPerDay;
}

/// Run-local index of the first person to show symptoms, if anyone did.
inline std::optional<std::size_t> first_symptomatic_person(const RunOutcome &outcome)
{
    const Event *first = nullptr;
    for (const auto &e : outcome.events) {
        if (e.kind == EventKind::Symptomatic && (!first || e.t < first->t)) {
            first = &e;
        }
    }
    if (!first) {
        return std::nullopt;
    }
    return first->person;
}

/// Fraction of runs in which the nth symptomatic case never appears.
inline double emergence_proportion(std::span<const RunOutcome> outcomes, std::size_t n)
{
    if (outcomes.empty()) {
        throw EmptyCollection("no outcomes");
    }
    const auto missing = std::count_if(outcomes.begin(), outcomes.end(),
                                       [n](const RunOutcome &o) { return !nth_symptomatic(o, n).has_value(); });
    return static_cast<double>(missing) / static_cast<double>(outcomes.size());
}

/// Median of the values, empty for an empty input.
inline std::optional<double> median(std::vector<double> values)
{
    if (values.empty()) {
        return std::nullopt;
    }
    std::sort(values.begin(), values.end());
    const auto n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

/// Median days to the nth symptomatic case over the runs where it emerged.
inline std::optional<double> median_nth_symptomatic(std::span<const RunOutcome> outcomes, std::size_t n)
{
    std::vector<double> days;
    for (const auto &o : outcomes) {
        if (const auto d = nth_symptomatic(o, n)) {
            days.push_back(*d);
        }
    }
    return median(std::move(days));
}

struct HourlyCurves {
    std::size_t roster_size = 0;
    std::vector<std::array<double, 4>> mean; // S, E, I, R per hour
    std::vector<std::array<double, 4>> std;
    std::vector<double> infected_mean; // (E + I + R) / roster
    std::vector<double> infected_std;
};

/// Mean and population standard deviation across runs, per hourly bin.
inline HourlyCurves aggregate_hourly(std::span<const RunOutcome> outcomes)
{
    if (outcomes.empty()) {
        throw EmptyCollection("no outcomes");
    }
    const auto roster = outcomes.front().roster_size();
    const auto bins = outcomes.front().hourly.size();
    for (const auto &o : outcomes) {
        if (o.roster_size() != roster || o.hourly.size() != bins) {
            throw MixedCohorts("outcomes differ in roster size or horizon");
        }
    }
    HourlyCurves out;
    out.roster_size = roster;
    out.mean.resize(bins);
    out.std.resize(bins);
    out.infected_mean.resize(bins);
    out.infected_std.resize(bins);
    const auto runs = static_cast<double>(outcomes.size());
    for (std::size_t h = 0; h < bins; ++h) {
        for (std::size_t c = 0; c < 5; ++c) {
            CompensatedSum sum;
            CompensatedSum sq;
            for (const auto &o : outcomes) {
                const auto &counts = o.hourly[h];
                const double x = c < 4 ? static_cast<double>(counts[c])
                                       : static_cast<double>(counts[1] + counts[2] + counts[3])
                                             / static_cast<double>(roster);
                sum.add(x);
                sq.add(x * x);
            }
            const double mean = sum.value() / runs;
            const double var = std::max(0.0, sq.value() / runs - mean * mean);
            if (c < 4) {
                out.mean[h][c] = mean;
                out.std[h][c] = std::sqrt(var);
            } else {
                out.infected_mean[h] = mean;
                out.infected_std[h] = std::sqrt(var);
            }
        }
    }
    return out;
}

/// One row of summary.csv.
struct OutcomeSummary {
    std::string scenario;
    std::string observation;
    std::string patient_zero;
    std::uint64_t seed = 0;
    double saturation = 0.0;
    TransmissionLikelihood likelihood;
    std::array<std::optional<double>, 3> t_symptomatic;
};

inline OutcomeSummary summarize(const RunOutcome &o, const TransmissionLikelihood &likelihood)
{
    OutcomeSummary s;
    s.scenario = o.scenario;
    s.observation = o.observation;
    s.patient_zero = o.patient_zero_id;
    s.seed = o.seed;
    s.saturation = saturation(o);
    s.likelihood = likelihood;
    for (std::size_t n = 1; n <= 3; ++n) {
        s.t_symptomatic[n - 1] = nth_symptomatic(o, n);
    }
    return s;
}

inline constexpr std::string_view kSummaryHeader =
    "scenario,observation,patient_zero,seed,saturation,beta_hat,T,beta_hat_T,t_sympt_1,t_sympt_2,t_sympt_3";
inline constexpr std::string_view kCurvesHeader =
    "scenario,hour,mean_infected_prop,std_infected_prop,mean_S,mean_E,mean_I,mean_R";
inline constexpr std::string_view kEmergenceHeader = "scenario,n,proportion_not_emerged,median_days";

namespace detail {

inline std::string g17(double v) { return fmt::format("{:.17g}", v); }
inline std::string g17(const std::optional<double> &v) { return v ? g17(*v) : std::string(); }

} // namespace detail

inline void write_summary_header(std::ostream &out) { out << kSummaryHeader << '\n'; }

inline void write_summary_row(std::ostream &out, const OutcomeSummary &s)
{
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", s.scenario, s.observation, s.patient_zero, s.seed,
                       detail::g17(s.saturation), detail::g17(s.likelihood.beta_hat),
                       detail::g17(s.likelihood.exposure_T), detail::g17(s.likelihood.product),
                       detail::g17(s.t_symptomatic[0]), detail::g17(s.t_symptomatic[1]),
                       detail::g17(s.t_symptomatic[2]));
}

inline void write_curves_header(std::ostream &out) { out << kCurvesHeader << '\n'; }

inline void write_curves_rows(std::ostream &out, std::string_view scenario, const HourlyCurves &c)
{
    for (std::size_t h = 0; h < c.mean.size(); ++h) {
        out << fmt::format("{},{},{},{},{},{},{},{}\n", scenario, h, detail::g17(c.infected_mean[h]),
                           detail::g17(c.infected_std[h]), detail::g17(c.mean[h][0]), detail::g17(c.mean[h][1]),
                           detail::g17(c.mean[h][2]), detail::g17(c.mean[h][3]));
    }
}

inline void write_emergence_header(std::ostream &out) { out << kEmergenceHeader << '\n'; }

inline void write_emergence_rows(std::ostream &out, std::string_view scenario, std::span<const RunOutcome> outcomes,
                                 std::size_t max_n = 3)
{
    for (std::size_t n = 1; n <= max_n; ++n) {
        out << fmt::format("{},{},{},{}\n", scenario, n, detail::g17(emergence_proportion(outcomes, n)),
                           detail::g17(median_nth_symptomatic(outcomes, n)));
    }
}

} // namespace ctsim

#endif
