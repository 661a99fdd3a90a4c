#ifndef CTSIM_EPIDEMIC_HPP
#define CTSIM_EPIDEMIC_HPP

// Per-agent SEIR state machine and the stochastic one-second transmission
// step driven by trajectory frames.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <ctsim/error.hpp>
#include <ctsim/kernel.hpp>
#include <ctsim/random.hpp>
#include <ctsim/trajectory.hpp>

namespace ctsim {

enum class Compartment : std::uint8_t { Susceptible, Exposed, Infectious, Recovered };

/// How the infection-to-symptom waiting time is drawn.
enum class IncubationModel {
    Exponential, // continuous waiting time of a Poisson process
    PoissonDays, // integer number of days, Poisson distributed (sensitivity runs)
};

/// How infectious agents recover.
enum class RecoveryModel {
    PreSampled, // exponential duration drawn once when infected
    PerStep,    // Bernoulli(gamma * dt) every step
};

struct DiseaseParams {
    double latency_hours = 24.0;
    double p_symptomatic = 0.75;
    double mean_incubation_days = 4.0;
    double gamma_per_day = 0.1;
    double dt = 1.0; // s
    IncubationModel incubation = IncubationModel::Exponential;
    RecoveryModel recovery = RecoveryModel::PreSampled;

    double latency_seconds() const noexcept { return latency_hours * kSecondsPerHour; }

    void validate() const
    {
        if (!(p_symptomatic >= 0.0 && p_symptomatic <= 1.0) || !(latency_hours > 0.0)
            || !(mean_incubation_days > 0.0) || !(gamma_per_day > 0.0) || !(dt > 0.0)) {
            throw InvalidParameter("disease parameters out of range");
        }
    }
};

enum class EventKind : std::uint8_t { Infected, Infectious, Symptomatic, Recovered };

inline std::string_view to_string(EventKind k) noexcept
{
    switch (k) {
    case EventKind::Infected:
        return "infected";
    case EventKind::Infectious:
        return "infectious";
    case EventKind::Symptomatic:
        return "symptomatic";
    case EventKind::Recovered:
        return "recovered";
    }
    return "?";
}

struct Event {
    EventKind kind = EventKind::Infected;
    std::uint32_t person = 0; // agent index within the run
    double t = 0.0;           // absolute seconds since Day 0
    std::optional<std::uint32_t> source;

    bool operator==(const Event &) const = default;
};

inline constexpr double kNever = std::numeric_limits<double>::infinity();

struct AgentState {
    std::string person_id;
    Compartment compartment = Compartment::Susceptible;
    bool immune = false;
    bool will_be_symptomatic = false;
    std::optional<double> t_infected;
    std::optional<double> t_infectious;
    std::optional<double> t_symptomatic;
    std::optional<double> t_recovered;

    // Pre-sampled transition times that have not been reached yet.
    double infectious_due = kNever;
    double symptom_due = kNever;
    double recovery_due = kNever;
};

/// Snapshot of an infectious agent, kept for the airborne exposure term.
struct Emission {
    double t = 0.0;
    std::uint32_t source = 0;
    Vec2 pos{};
    Vec2 facing{1.0, 0.0};
};

inline constexpr double kEmissionInterval = 60.0;               // s
inline constexpr double kEmissionHorizon = 3.0 * kSecondsPerHour; // s

using CompartmentCounts = std::array<std::uint32_t, 4>;

struct EpidemicState {
    double clock = 0.0;
    std::vector<AgentState> agents;
    Rng rng;
    std::vector<Event> log;
    std::vector<Emission> emissions;
    double next_due = kNever;

    EpidemicState() = default;

    EpidemicState(std::span<const std::string> ids, std::uint64_t seed) : rng(seed)
    {
        agents.reserve(ids.size());
        for (const auto &id : ids) {
            agents.push_back({});
            agents.back().person_id = id;
        }
    }

    std::size_t index_of(std::string_view id) const
    {
        for (std::size_t k = 0; k < agents.size(); ++k) {
            if (agents[k].person_id == id) {
                return k;
            }
        }
        throw UnknownPerson("unknown person '" + std::string(id) + "'");
    }

    CompartmentCounts counts() const noexcept
    {
        CompartmentCounts c{};
        for (const auto &a : agents) {
            ++c[static_cast<std::size_t>(a.compartment)];
        }
        return c;
    }
};

/// Days from infection to symptom onset.
inline double sample_incubation(Rng &rng, const DiseaseParams &dp = {})
{
    if (dp.incubation == IncubationModel::PoissonDays) {
        return static_cast<double>(rng.poisson(dp.mean_incubation_days));
    }
    return rng.exponential(dp.mean_incubation_days);
}

/// Days from becoming infectious to recovery.
inline double sample_infectious_duration(Rng &rng, const DiseaseParams &dp = {})
{
    return rng.exponential(1.0 / dp.gamma_per_day);
}

inline bool is_run_complete(const EpidemicState &state) noexcept
{
    return std::none_of(state.agents.begin(), state.agents.end(), [](const AgentState &a) {
        return a.compartment == Compartment::Exposed || a.compartment == Compartment::Infectious;
    });
}

namespace detail {

inline void refresh_next_due(EpidemicState &s) noexcept
{
    s.next_due = kNever;
    for (const auto &a : s.agents) {
        s.next_due = std::min({s.next_due, a.infectious_due, a.symptom_due, a.recovery_due});
    }
}

/// Draws symptomaticity and the disease clocks of a newly infected agent.
inline void schedule_course(EpidemicState &s, AgentState &a, double t_infected, const DiseaseParams &dp)
{
    a.t_infected = t_infected;
    a.will_be_symptomatic = s.rng.bernoulli(dp.p_symptomatic);
    const double incubation = sample_incubation(s.rng, dp);
    a.symptom_due = a.will_be_symptomatic ? t_infected + incubation * kSecondsPerDay : kNever;
    a.infectious_due = t_infected + dp.latency_seconds();
    a.recovery_due = dp.recovery == RecoveryModel::PreSampled
                         ? a.infectious_due + sample_infectious_duration(s.rng, dp) * kSecondsPerDay
                         : kNever;
}

inline void recover(EpidemicState &s, std::size_t k, double t)
{
    auto &a = s.agents[k];
    a.compartment = Compartment::Recovered;
    a.t_recovered = t;
    a.recovery_due = kNever;
    s.log.push_back({EventKind::Recovered, static_cast<std::uint32_t>(k), t, std::nullopt});
}

/// Applies every scheduled transition with time <= t, in time order.
inline void advance_events(EpidemicState &s, double t)
{
    if (t < s.next_due) {
        return;
    }
    struct Due {
        double t;
        EventKind kind;
        std::size_t person;
    };
    std::vector<Due> due;
    for (std::size_t k = 0; k < s.agents.size(); ++k) {
        const auto &a = s.agents[k];
        if (a.infectious_due <= t) {
            due.push_back({a.infectious_due, EventKind::Infectious, k});
        }
        if (a.symptom_due <= t) {
            due.push_back({a.symptom_due, EventKind::Symptomatic, k});
        }
        if (a.recovery_due <= t) {
            due.push_back({a.recovery_due, EventKind::Recovered, k});
        }
    }
    std::sort(due.begin(), due.end(), [](const Due &x, const Due &y) {
        if (x.t != y.t) {
            return x.t < y.t;
        }
        if (x.kind != y.kind) {
            return x.kind < y.kind;
        }
        return x.person < y.person;
    });
    for (const auto &d : due) {
        auto &a = s.agents[d.person];
        switch (d.kind) {
        case EventKind::Infectious:
            a.compartment = Compartment::Infectious;
            a.t_infectious = d.t;
            a.infectious_due = kNever;
            s.log.push_back({EventKind::Infectious, static_cast<std::uint32_t>(d.person), d.t, std::nullopt});
            break;
        case EventKind::Symptomatic:
            a.t_symptomatic = d.t;
            a.symptom_due = kNever;
            s.log.push_back({EventKind::Symptomatic, static_cast<std::uint32_t>(d.person), d.t, std::nullopt});
            break;
        case EventKind::Recovered:
            recover(s, d.person, d.t);
            break;
        case EventKind::Infected:
            break;
        }
    }
    refresh_next_due(s);
}

/// Per-step recovery draws for every agent infectious at time t.
inline void per_step_recovery(EpidemicState &s, double t, const DiseaseParams &dp)
{
    const double p = dp.gamma_per_day * dp.dt / kSecondsPerDay;
    for (std::size_t k = 0; k < s.agents.size(); ++k) {
        if (s.agents[k].compartment == Compartment::Infectious && s.rng.bernoulli(p)) {
            recover(s, k, t);
        }
    }
}

} // namespace detail

/// Makes agent `k` infectious at the current clock, with its infection
/// back-dated by the latency. An immune agent is left untouched.
inline void seed_patient_zero(EpidemicState &s, std::size_t k, const DiseaseParams &dp = {})
{
    if (k >= s.agents.size()) {
        throw UnknownPerson("patient zero index out of range");
    }
    auto &a = s.agents[k];
    if (a.immune) {
        return;
    }
    const auto person = static_cast<std::uint32_t>(k);
    detail::schedule_course(s, a, s.clock - dp.latency_seconds(), dp);
    s.log.push_back({EventKind::Infected, person, *a.t_infected, std::nullopt});
    a.compartment = Compartment::Infectious;
    a.t_infectious = s.clock;
    a.infectious_due = kNever;
    s.log.push_back({EventKind::Infectious, person, s.clock, std::nullopt});
    detail::refresh_next_due(s);
    detail::advance_events(s, s.clock);
}

inline void seed_patient_zero(EpidemicState &s, std::string_view id, const DiseaseParams &dp = {})
{
    seed_patient_zero(s, s.index_of(id), dp);
}

/// Pose and pairwise log-survival lookups computed directly from a frame.
/// log_survival(i, j) = log(1 - min(beta_ij * dt, 1)).
class FrameExposure {
public:
    FrameExposure(const TrajectoryFrame &frame, const KernelParams &kp, double dt) noexcept
        : frame_(&frame), kp_(&kp), dt_(dt) {}

    std::size_t size() const noexcept { return frame_->poses.size(); }
    const Pose &pose(std::size_t i) const noexcept { return frame_->poses[i]; }

    double log_survival(std::size_t i, std::size_t j) const noexcept
    {
        const auto &a = frame_->poses[i];
        const auto &b = frame_->poses[j];
        const double rate = pair_rate(clamped_geometry(a.pos, a.facing, b.pos, b.facing), *kp_);
        return std::log1p(-std::min(rate * dt_, 1.0));
    }

private:
    const TrajectoryFrame *frame_;
    const KernelParams *kp_;
    double dt_;
};

/// Pair rates and log-survival terms for every unordered pair of a roster in
/// every frame. Shared read-only by all runs replaying the same observation.
class PairRateTable {
public:
    PairRateTable() = default;

    PairRateTable(const Observation &obs, const KernelParams &kp, double dt)
        : n_(obs.roster.size()), pairs_(n_ * (n_ > 0 ? n_ - 1 : 0) / 2)
    {
        rate_.assign(pairs_ * obs.frames.size(), 0.0);
        log_survival_.assign(pairs_ * obs.frames.size(), 0.0);
        for (std::size_t f = 0; f < obs.frames.size(); ++f) {
            const auto &poses = obs.frames[f].poses;
            const FrameExposure exposure(obs.frames[f], kp, dt);
            for (std::size_t a = 0; a < n_; ++a) {
                if (!poses[a].present) {
                    continue;
                }
                for (std::size_t b = a + 1; b < n_; ++b) {
                    if (!poses[b].present) {
                        continue;
                    }
                    const auto k = f * pairs_ + pair_index(a, b);
                    const auto &pa = poses[a];
                    const auto &pb = poses[b];
                    rate_[k] = pair_rate(clamped_geometry(pa.pos, pa.facing, pb.pos, pb.facing), kp);
                    log_survival_[k] = exposure.log_survival(a, b);
                }
            }
        }
    }

    std::size_t roster_size() const noexcept { return n_; }

    std::size_t pair_index(std::size_t a, std::size_t b) const noexcept
    {
        if (a > b) {
            std::swap(a, b);
        }
        return a * (2 * n_ - a - 1) / 2 + (b - a - 1);
    }

    /// Zero when either person is absent.
    double rate(std::size_t frame, std::size_t a, std::size_t b) const noexcept
    {
        return rate_[frame * pairs_ + pair_index(a, b)];
    }

    double log_survival(std::size_t frame, std::size_t a, std::size_t b) const noexcept
    {
        return log_survival_[frame * pairs_ + pair_index(a, b)];
    }

private:
    std::size_t n_ = 0;
    std::size_t pairs_ = 0;
    std::vector<double> rate_;
    std::vector<double> log_survival_;
};

/// Table-backed view of one frame for a run that simulates a subset of the
/// observation's roster. Agent i of the run is roster member members[i].
class TableExposure {
public:
    TableExposure(const PairRateTable &table, const TrajectoryFrame &frame, std::size_t frame_index,
                  std::span<const std::size_t> members) noexcept
        : table_(&table), frame_(&frame), index_(frame_index), members_(members) {}

    std::size_t size() const noexcept { return members_.size(); }
    const Pose &pose(std::size_t i) const noexcept { return frame_->poses[members_[i]]; }

    double log_survival(std::size_t i, std::size_t j) const noexcept
    {
        return table_->log_survival(index_, members_[i], members_[j]);
    }

private:
    const PairRateTable *table_;
    const TrajectoryFrame *frame_;
    std::size_t index_;
    std::span<const std::size_t> members_;
};

/// Calls fn(source, log_survival_term) for every buffered emission that is
/// older than zero and younger than the emission horizon at time `now`.
template <class Fn>
void for_each_airborne_term(const EpidemicState &s, const Pose &receiver, double now, const KernelParams &kp,
                            const DiseaseParams &dp, Fn &&fn)
{
    // Each snapshot stands for kEmissionInterval seconds of emission; the
    // lambda weight makes a stationary source's lingering term integrate to
    // at most the contemporaneous rate.
    const double weight = kp.lambda_decay * kEmissionInterval / kSecondsPerHour;
    for (const auto &e : s.emissions) {
        const double elapsed = now - e.t;
        if (elapsed <= 0.0 || elapsed > kEmissionHorizon) {
            continue;
        }
        const double rate = airborne_decay(pair_rate(clamped_geometry(receiver.pos, receiver.facing, e.pos, e.facing), kp),
                                           elapsed / kSecondsPerHour, kp.lambda_decay);
        fn(e.source, std::log1p(-std::min(rate * weight * dp.dt, 1.0)));
    }
}

/// One time step at the current clock: due transitions, then infection draws
/// for every present, non-immune susceptible agent, then the clock advances.
template <class Exposure>
void transmission_step(EpidemicState &s, const Exposure &exposure, const KernelParams &kp, const DiseaseParams &dp)
{
    if (exposure.size() != s.agents.size()) {
        throw FrameRosterMismatch("frame has " + std::to_string(exposure.size()) + " poses for "
                                  + std::to_string(s.agents.size()) + " agents");
    }
    const double now = s.clock;
    detail::advance_events(s, now);
    if (dp.recovery == RecoveryModel::PerStep) {
        detail::per_step_recovery(s, now, dp);
    }

    const std::size_t n = s.agents.size();
    constexpr std::size_t kInline = 64;
    std::array<std::uint32_t, kInline> infectious_inline{};
    std::vector<std::uint32_t> infectious_heap;
    std::span<std::uint32_t> infectious;
    std::size_t n_inf = 0;
    if (n > kInline) {
        infectious_heap.resize(n);
        infectious = infectious_heap;
    } else {
        infectious = infectious_inline;
    }
    for (std::size_t j = 0; j < n; ++j) {
        if (s.agents[j].compartment == Compartment::Infectious && exposure.pose(j).present) {
            infectious[n_inf++] = static_cast<std::uint32_t>(j);
        }
    }
    const bool airborne = kp.mode == TransmissionMode::Airborne;
    const bool any_source = n_inf > 0 || (airborne && !s.emissions.empty());

    if (any_source) {
        std::vector<std::uint32_t> newly;
        std::vector<std::uint32_t> sources;
        for (std::size_t i = 0; i < n; ++i) {
            const auto &a = s.agents[i];
            if (a.compartment != Compartment::Susceptible || a.immune || !exposure.pose(i).present) {
                continue;
            }
            double log_survival = 0.0;
            for (std::size_t k = 0; k < n_inf; ++k) {
                log_survival += exposure.log_survival(i, infectious[k]);
            }
            if (airborne) {
                for_each_airborne_term(s, exposure.pose(i), now, kp, dp,
                                       [&](std::uint32_t, double term) { log_survival += term; });
            }
            if (log_survival == 0.0) {
                continue;
            }
            const double p = -std::expm1(log_survival);
            if (!s.rng.bernoulli(p)) {
                continue;
            }
            // Attribute the infection to a source in proportion to its hazard.
            // Saturated pairs (rate * dt >= 1) carry an infinite hazard and
            // share the attribution uniformly among themselves.
            const auto visit = [&](auto &&fn) {
                for (std::size_t k = 0; k < n_inf; ++k) {
                    fn(infectious[k], exposure.log_survival(i, infectious[k]));
                }
                if (airborne) {
                    for_each_airborne_term(s, exposure.pose(i), now, kp, dp, fn);
                }
            };
            const bool certain = std::isinf(log_survival);
            std::size_t saturated = 0;
            if (certain) {
                visit([&](std::uint32_t, double term) { saturated += std::isinf(term) ? 1 : 0; });
            }
            double target = certain ? static_cast<double>(s.rng.index(saturated)) : s.rng.uniform() * -log_survival;
            std::uint32_t chosen = n_inf > 0 ? infectious[0] : s.emissions.front().source;
            bool found = false;
            visit([&](std::uint32_t source, double term) {
                if (found) {
                    return;
                }
                if (certain) {
                    if (std::isinf(term)) {
                        chosen = source;
                        found = target < 0.5;
                        target -= 1.0;
                    }
                    return;
                }
                target += term;
                chosen = source;
                found = target <= 0.0;
            });
            newly.push_back(static_cast<std::uint32_t>(i));
            sources.push_back(chosen);
        }
        // Infections take effect after all draws of this step.
        for (std::size_t k = 0; k < newly.size(); ++k) {
            auto &a = s.agents[newly[k]];
            a.compartment = Compartment::Exposed;
            detail::schedule_course(s, a, now, dp);
            s.log.push_back({EventKind::Infected, newly[k], now, sources[k]});
        }
        if (!newly.empty()) {
            detail::refresh_next_due(s);
        }
    }

    if (airborne && std::fmod(now, kEmissionInterval) == 0.0) {
        std::erase_if(s.emissions, [now](const Emission &e) { return now - e.t >= kEmissionHorizon; });
        for (std::size_t k = 0; k < n_inf; ++k) {
            const auto &p = exposure.pose(infectious[k]);
            s.emissions.push_back({now, infectious[k], p.pos, p.facing});
        }
    }
    s.clock = now + dp.dt;
}

/// Frame-based overload; pair rates are evaluated on the fly.
inline void transmission_step(EpidemicState &s, const TrajectoryFrame &frame, const KernelParams &kp,
                              const DiseaseParams &dp)
{
    transmission_step(s, FrameExposure(frame, kp, dp.dt), kp, dp);
}

/// Out-of-class time: no transmission, only disease progression.
inline void progress_offclass(EpidemicState &s, double duration, const DiseaseParams &dp = {})
{
    if (!(duration > 0.0)) {
        throw InvalidParameter("off-class duration must be positive");
    }
    const double end = s.clock + duration;
    if (dp.recovery == RecoveryModel::PerStep) {
        double t = s.clock;
        while (t < end && !is_run_complete(s)) {
            const bool any_infectious = std::any_of(s.agents.begin(), s.agents.end(), [](const AgentState &a) {
                return a.compartment == Compartment::Infectious;
            });
            if (!any_infectious) {
                // Nothing to draw until the next scheduled transition.
                const double next = std::ceil((s.next_due - s.clock) / dp.dt) * dp.dt + s.clock;
                t = std::max(t, std::min(next, end));
                if (t >= end) {
                    break;
                }
            }
            detail::advance_events(s, t);
            detail::per_step_recovery(s, t, dp);
            t += dp.dt;
        }
    }
    detail::advance_events(s, end);
    s.clock = end;
}

} // namespace ctsim

#endif
