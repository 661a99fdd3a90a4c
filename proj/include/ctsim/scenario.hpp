#ifndef CTSIM_SCENARIO_HPP
#define CTSIM_SCENARIO_HPP

// School calendar, scenario transforms (half class, teacher vaccination),
// single-run replay and the parallel patient-zero sweep.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <ctsim/epidemic.hpp>
#include <ctsim/error.hpp>
#include <ctsim/kernel.hpp>
#include <ctsim/random.hpp>
#include <ctsim/trajectory.hpp>

namespace ctsim {

enum class Weekday { Monday, Tuesday, Wednesday, Thursday, Friday, Saturday, Sunday };

inline std::optional<Weekday> parse_weekday(std::string_view s)
{
    constexpr std::string_view names[] = {"monday", "tuesday", "wednesday", "thursday",
                                          "friday", "saturday", "sunday"};
    for (int k = 0; k < 7; ++k) {
        if (s == names[k]) {
            return static_cast<Weekday>(k);
        }
    }
    return std::nullopt;
}

inline std::string_view to_string(Weekday d) noexcept
{
    constexpr std::string_view names[] = {"monday", "tuesday", "wednesday", "thursday",
                                          "friday", "saturday", "sunday"};
    return names[static_cast<int>(d)];
}

/// In-class sessions on weekdays; every session starts at the beginning of its day.
struct SchoolCalendar {
    std::vector<double> session_starts; // absolute seconds since Day 0
    double session_length = 0.0;        // s
    int horizon_days = 0;
    Weekday start_weekday = Weekday::Monday;

    std::size_t size() const noexcept { return session_starts.size(); }
    double horizon_end() const noexcept { return horizon_days * kSecondsPerDay; }

    Weekday weekday_of(std::size_t k) const noexcept
    {
        const auto day = static_cast<int>(std::lround(session_starts[k] / kSecondsPerDay));
        return static_cast<Weekday>((static_cast<int>(start_weekday) + day) % 7);
    }

    /// Start-to-start gap from session k to the next school day (which may lie
    /// beyond the horizon): 72 h after a Friday, 24 h otherwise.
    double gap_after(std::size_t k) const noexcept
    {
        return weekday_of(k) == Weekday::Friday ? 3.0 * kSecondsPerDay : kSecondsPerDay;
    }
};

inline SchoolCalendar build_calendar(int horizon_days, double session_length, Weekday start = Weekday::Monday)
{
    if (horizon_days < 1) {
        throw InvalidParameter("horizon must be at least one day");
    }
    SchoolCalendar cal;
    cal.session_length = session_length;
    cal.horizon_days = horizon_days;
    cal.start_weekday = start;
    for (int day = 0; day < horizon_days; ++day) {
        if ((static_cast<int>(start) + day) % 7 < 5) {
            cal.session_starts.push_back(day * kSecondsPerDay);
        }
    }
    return cal;
}

enum class DensityVariant { Full, Half };
enum class VaccinationVariant { None, Teachers };

/// Whether the half-class subset is redrawn per replicate or fixed for a sweep.
enum class HalfClassMode { Resample, Fixed };

struct ScenarioConfig {
    DensityVariant density = DensityVariant::Full;
    VaccinationVariant vaccination = VaccinationVariant::None;
    double vaccine_efficacy = 0.858;
    int horizon_days = 28;
    int reps = 60;
    std::uint64_t base_seed = 0;
    HalfClassMode half_mode = HalfClassMode::Resample;
    Weekday start_weekday = Weekday::Monday;
    KernelParams kernel;
    DiseaseParams disease;

    std::string name() const
    {
        return std::string(density == DensityVariant::Full ? "full" : "half") + "-"
               + (vaccination == VaccinationVariant::None ? "novax" : "vax");
    }

    void validate() const
    {
        if (!(vaccine_efficacy >= 0.0 && vaccine_efficacy <= 1.0)) {
            throw InvalidParameter("vaccine efficacy must lie in [0, 1]");
        }
        if (horizon_days < 1 || reps < 1) {
            throw InvalidParameter("horizon and reps must be at least 1");
        }
        kernel.validate();
        disease.validate();
    }
};

/// Parses "full-novax", "half-vax", etc. into the two variants.
inline std::optional<std::pair<DensityVariant, VaccinationVariant>> parse_scenario_name(std::string_view s)
{
    if (s == "full-novax") {
        return std::pair{DensityVariant::Full, VaccinationVariant::None};
    }
    if (s == "full-vax") {
        return std::pair{DensityVariant::Full, VaccinationVariant::Teachers};
    }
    if (s == "half-novax") {
        return std::pair{DensityVariant::Half, VaccinationVariant::None};
    }
    if (s == "half-vax") {
        return std::pair{DensityVariant::Half, VaccinationVariant::Teachers};
    }
    return std::nullopt;
}

/// Roster indices of a half class: ceil(children / 2) children and one
/// teacher, uniformly sampled. `must_include` is always retained.
inline std::vector<std::size_t> sample_half_class(const Observation &obs, Rng &rng,
                                                  std::optional<std::size_t> must_include = std::nullopt)
{
    std::vector<std::size_t> children;
    std::vector<std::size_t> teachers;
    for (std::size_t k = 0; k < obs.roster.size(); ++k) {
        (obs.roster[k].role == Role::Child ? children : teachers).push_back(k);
    }
    if (teachers.empty()) {
        throw NoTeacher("half class requires at least one teacher");
    }
    const std::size_t keep = (children.size() + 1) / 2;
    std::vector<std::size_t> out;
    out.reserve(keep + 1);

    std::optional<std::size_t> forced_child;
    std::size_t teacher = 0;
    if (must_include) {
        if (*must_include >= obs.roster.size()) {
            throw UnknownPerson("patient zero index out of range");
        }
        if (obs.roster[*must_include].role == Role::Child) {
            forced_child = *must_include;
        }
    }
    if (must_include && !forced_child) {
        teacher = *must_include;
    } else {
        teacher = teachers[rng.index(teachers.size())];
    }

    // Partial Fisher-Yates over the remaining children.
    std::vector<std::size_t> pool;
    for (auto c : children) {
        if (!forced_child || c != *forced_child) {
            pool.push_back(c);
        }
    }
    std::size_t needed = keep;
    if (forced_child) {
        out.push_back(*forced_child);
        --needed;
    }
    for (std::size_t k = 0; k < needed; ++k) {
        const auto j = k + rng.index(pool.size() - k);
        std::swap(pool[k], pool[j]);
        out.push_back(pool[k]);
    }
    out.push_back(teacher);
    std::sort(out.begin(), out.end());
    return out;
}

/// Half-class copy of `obs`; frames are filtered, the room is unchanged.
inline Observation apply_half_class(const Observation &obs, Rng &rng)
{
    const auto members = sample_half_class(obs, rng);
    return subset(obs, members);
}

/// Immunity flags: each teacher independently protected with probability `efficacy`.
inline std::vector<bool> apply_vaccination(std::span<const Person> roster, double efficacy, Rng &rng)
{
    std::vector<bool> immune(roster.size(), false);
    for (std::size_t k = 0; k < roster.size(); ++k) {
        if (roster[k].role == Role::Teacher) {
            immune[k] = rng.bernoulli(efficacy);
        }
    }
    return immune;
}

/// Everything recorded from one simulated outbreak.
struct RunOutcome {
    std::string scenario;
    std::string observation;
    std::size_t patient_zero = 0;       // index into the observation roster
    std::size_t patient_zero_local = 0; // index into `members`
    std::string patient_zero_id;
    std::uint64_t seed = 0;
    std::vector<std::size_t> members; // observation roster indices that were simulated
    std::vector<bool> immune;         // per member
    std::vector<Event> events;        // Event::person indexes `members`
    std::vector<CompartmentCounts> hourly; // counts at the end of each hour of the horizon
    CompartmentCounts final_counts{};
    double end_clock = 0.0;
    int horizon_days = 0;
    std::size_t sessions = 0;
    double session_length = 0.0;

    std::size_t roster_size() const noexcept { return members.size(); }
    bool operator==(const RunOutcome &) const = default;
};

/// Compartment of every agent at time t, reconstructed from an event log.
inline CompartmentCounts counts_from_events(std::span<const Event> events, std::size_t n_agents, double t)
{
    std::vector<Compartment> c(n_agents, Compartment::Susceptible);
    for (const auto &e : events) {
        if (e.t > t) {
            continue;
        }
        auto &cur = c[e.person];
        switch (e.kind) {
        case EventKind::Infected:
            cur = std::max(cur, Compartment::Exposed);
            break;
        case EventKind::Infectious:
            cur = std::max(cur, Compartment::Infectious);
            break;
        case EventKind::Recovered:
            cur = Compartment::Recovered;
            break;
        case EventKind::Symptomatic:
            break;
        }
    }
    CompartmentCounts out{};
    for (auto x : c) {
        ++out[static_cast<std::size_t>(x)];
    }
    return out;
}

/// End-of-hour compartment counts over the whole horizon.
inline std::vector<CompartmentCounts> hourly_counts(std::span<const Event> events, std::size_t n_agents,
                                                    int horizon_days)
{
    struct Times {
        double infected = kNever;
        double infectious = kNever;
        double recovered = kNever;
    };
    std::vector<Times> times(n_agents);
    for (const auto &e : events) {
        auto &x = times[e.person];
        if (e.kind == EventKind::Infected) {
            x.infected = e.t;
        } else if (e.kind == EventKind::Infectious) {
            x.infectious = e.t;
        } else if (e.kind == EventKind::Recovered) {
            x.recovered = e.t;
        }
    }
    const auto bins = static_cast<std::size_t>(horizon_days) * 24;
    std::vector<CompartmentCounts> out(bins, CompartmentCounts{});
    for (std::size_t h = 0; h < bins; ++h) {
        const double t = static_cast<double>(h + 1) * kSecondsPerHour;
        auto &c = out[h];
        for (const auto &x : times) {
            if (x.recovered <= t) {
                ++c[3];
            } else if (x.infectious <= t) {
                ++c[2];
            } else if (x.infected <= t) {
                ++c[1];
            } else {
                ++c[0];
            }
        }
    }
    return out;
}

/// An observation prepared for repeated replay: the pair-rate table is built
/// once and shared read-only by every run.
class ReplayContext {
public:
    ReplayContext(Observation obs, const KernelParams &kp, const DiseaseParams &dp)
        : obs_(std::make_shared<const Observation>(std::move(obs))), kernel_(kp), disease_(dp)
    {
        kp.validate();
        dp.validate();
        table_ = std::make_shared<const PairRateTable>(*obs_, kp, dp.dt);
    }

    const Observation &observation() const noexcept { return *obs_; }
    const PairRateTable &table() const noexcept { return *table_; }
    const KernelParams &kernel() const noexcept { return kernel_; }
    const DiseaseParams &disease() const noexcept { return disease_; }

private:
    std::shared_ptr<const Observation> obs_;
    std::shared_ptr<const PairRateTable> table_;
    KernelParams kernel_;
    DiseaseParams disease_;
};

/// One outbreak: patient zero infectious at Day 0, the observation replayed
/// in every calendar session, disease progression between sessions, until the
/// horizon ends or nobody is exposed or infectious.
///
/// The context must have been built with sc.kernel and sc.disease.
/// `fixed_members` pins the simulated roster (HalfClassMode::Fixed).
inline RunOutcome run_simulation(const ReplayContext &ctx, const SchoolCalendar &cal, const ScenarioConfig &sc,
                                 std::size_t patient_zero, std::uint64_t seed,
                                 std::optional<std::span<const std::size_t>> fixed_members = std::nullopt)
{
    const auto &obs = ctx.observation();
    if (patient_zero >= obs.roster.size()) {
        throw UnknownPerson("patient zero index out of range");
    }
    Rng rng(seed);

    RunOutcome out;
    out.scenario = sc.name();
    out.observation = obs.class_id;
    out.patient_zero = patient_zero;
    out.patient_zero_id = obs.roster[patient_zero].id;
    out.seed = seed;
    out.horizon_days = cal.horizon_days;
    out.session_length = static_cast<double>(obs.session_length());

    if (fixed_members) {
        out.members.assign(fixed_members->begin(), fixed_members->end());
    } else if (sc.density == DensityVariant::Half) {
        out.members = sample_half_class(obs, rng, patient_zero);
    } else {
        out.members.resize(obs.roster.size());
        for (std::size_t k = 0; k < out.members.size(); ++k) {
            out.members[k] = k;
        }
    }
    const auto pz = std::find(out.members.begin(), out.members.end(), patient_zero);
    if (pz == out.members.end()) {
        throw UnknownPerson("patient zero '" + out.patient_zero_id + "' is not in the simulated roster");
    }
    out.patient_zero_local = static_cast<std::size_t>(pz - out.members.begin());

    std::vector<Person> roster;
    std::vector<std::string> ids;
    for (auto m : out.members) {
        roster.push_back(obs.roster[m]);
        ids.push_back(obs.roster[m].id);
    }
    out.immune = sc.vaccination == VaccinationVariant::Teachers
                     ? apply_vaccination(roster, sc.vaccine_efficacy, rng)
                     : std::vector<bool>(roster.size(), false);

    EpidemicState state(ids, rng.next());
    for (std::size_t k = 0; k < roster.size(); ++k) {
        state.agents[k].immune = out.immune[k];
    }
    const auto &kp = ctx.kernel();
    const auto &dp = ctx.disease();
    seed_patient_zero(state, out.patient_zero_local, dp);

    const double horizon_end = cal.horizon_end();
    for (std::size_t k = 0; k < cal.size() && !is_run_complete(state); ++k) {
        const double start = cal.session_starts[k];
        if (start >= horizon_end) {
            break;
        }
        if (state.clock < start) {
            progress_offclass(state, start - state.clock, dp);
        }
        ++out.sessions;
        for (std::size_t f = 0; f < obs.frames.size(); ++f) {
            if (is_run_complete(state) || state.clock >= horizon_end) {
                break;
            }
            transmission_step(state, TableExposure(ctx.table(), obs.frames[f], f, out.members), kp, dp);
        }
    }
    if (state.clock < horizon_end) {
        progress_offclass(state, horizon_end - state.clock, dp);
    }

    out.end_clock = state.clock;
    out.final_counts = state.counts();
    out.events = std::move(state.log);
    out.hourly = hourly_counts(out.events, out.members.size(), cal.horizon_days);
    return out;
}

/// Convenience overload that prepares the observation itself.
inline RunOutcome run_simulation(const Observation &obs, const SchoolCalendar &cal, const ScenarioConfig &sc,
                                 std::size_t patient_zero, std::uint64_t seed)
{
    const ReplayContext ctx(obs, sc.kernel, sc.disease);
    return run_simulation(ctx, cal, sc, patient_zero, seed);
}

/// Runs `task(i)` for i in [0, n) on up to `workers` threads.
template <class Task>
void parallel_for(std::size_t n, std::size_t workers, Task &&task)
{
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            task(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (auto i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
                    try {
                        task(i);
                    } catch (...) {
                        const std::lock_guard lock(failure_mutex);
                        if (!failure) {
                            failure = std::current_exception();
                        }
                        next.store(n);
                    }
                }
            });
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

inline std::size_t default_workers() noexcept { return std::max(1u, std::thread::hardware_concurrency()); }

/// Every roster member as patient zero times sc.reps replicates, ordered by
/// (patient zero, replicate). Seeds come from derive_seed(), so the outcome
/// set does not depend on `workers`.
inline std::vector<RunOutcome> sweep(const ReplayContext &ctx, const ScenarioConfig &sc,
                                     std::size_t workers = default_workers())
{
    sc.validate();
    const auto &obs = ctx.observation();
    const auto cal = build_calendar(sc.horizon_days, static_cast<double>(obs.session_length()), sc.start_weekday);

    std::optional<std::vector<std::size_t>> fixed;
    std::vector<std::size_t> patients;
    if (sc.density == DensityVariant::Half && sc.half_mode == HalfClassMode::Fixed) {
        Rng subset_rng(derive_seed(sc.base_seed, ~0ULL, ~0ULL));
        fixed = sample_half_class(obs, subset_rng);
        patients = *fixed;
    } else {
        for (std::size_t k = 0; k < obs.roster.size(); ++k) {
            patients.push_back(k);
        }
    }

    const auto reps = static_cast<std::size_t>(sc.reps);
    std::vector<RunOutcome> outcomes(patients.size() * reps);
    parallel_for(outcomes.size(), workers, [&](std::size_t i) {
        const auto pz = patients[i / reps];
        const auto rep = i % reps;
        const auto seed = derive_seed(sc.base_seed, pz, rep);
        if (fixed) {
            outcomes[i] = run_simulation(ctx, cal, sc, pz, seed, std::span<const std::size_t>(*fixed));
        } else {
            outcomes[i] = run_simulation(ctx, cal, sc, pz, seed);
        }
    });
    return outcomes;
}

inline std::vector<RunOutcome> sweep(const Observation &obs, const ScenarioConfig &sc,
                                     std::size_t workers = default_workers())
{
    const ReplayContext ctx(obs, sc.kernel, sc.disease);
    return sweep(ctx, sc, workers);
}

} // namespace ctsim

#endif
