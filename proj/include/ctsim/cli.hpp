#ifndef CTSIM_CLI_HPP
#define CTSIM_CLI_HPP

// Command-line front end: calibrate, synth, fuse and simulate.
// Exit codes: 0 success, 1 runtime or data error, 2 usage error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <ctsim/epidemic.hpp>
#include <ctsim/error.hpp>
#include <ctsim/kernel.hpp>
#include <ctsim/metrics.hpp>
#include <ctsim/observation_io.hpp>
#include <ctsim/scenario.hpp>
#include <ctsim/synthgen.hpp>
#include <ctsim/trajectory.hpp>

namespace ctsim::cli {

inline constexpr std::string_view kToolName = "ctsim";
inline constexpr std::string_view kToolVersion = "1.0.0";
inline constexpr const char *kWorkersEnv = "CTSIM_WORKERS";

enum ExitCode : int { kOk = 0, kRuntimeError = 1, kUsageError = 2 };

/// Usage problems detected after flag parsing (bad values, bad config).
class UsageError : public Error {
public:
    using Error::Error;
};

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------- units

namespace detail {

/// Splits "6ft" into (6, "ft"). Throws UsageError on a malformed number.
inline std::pair<double, std::string> split_unit(std::string_view text, std::string_view flag)
{
    std::size_t k = 0;
    while (k < text.size() && (std::isdigit(static_cast<unsigned char>(text[k])) || text[k] == '.' || text[k] == '-'
                               || text[k] == '+' || text[k] == 'e' || text[k] == 'E')) {
        // An 'e' only belongs to the number when followed by a digit or sign.
        if ((text[k] == 'e' || text[k] == 'E')
            && !(k + 1 < text.size() && (std::isdigit(static_cast<unsigned char>(text[k + 1])) || text[k + 1] == '-'
                                         || text[k + 1] == '+'))) {
            break;
        }
        ++k;
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + k, value);
    if (k == 0 || ec != std::errc{} || ptr != text.data() + k) {
        throw UsageError(fmt::format("{}: '{}' is not a number", flag, text));
    }
    return {value, std::string(text.substr(k))};
}

} // namespace detail

/// Length in meters; accepts a bare number (meters) or an m/ft suffix.
inline double parse_length(std::string_view text, std::string_view flag = "length")
{
    const auto [v, unit] = detail::split_unit(text, flag);
    if (unit.empty() || unit == "m") {
        return v;
    }
    if (unit == "ft") {
        return v * kMetersPerFoot;
    }
    throw UsageError(fmt::format("{}: unknown length unit '{}'", flag, unit));
}

/// Angle in radians; bare numbers are degrees, "rad"/"deg" suffixes accepted.
inline double parse_angle(std::string_view text, std::string_view flag = "angle")
{
    const auto [v, unit] = detail::split_unit(text, flag);
    if (unit.empty() || unit == "deg") {
        return v * std::numbers::pi / 180.0;
    }
    if (unit == "rad") {
        return v;
    }
    throw UsageError(fmt::format("{}: unknown angle unit '{}'", flag, unit));
}

/// Duration in minutes; accepts a bare number (minutes) or min/h/s suffixes.
inline double parse_minutes(std::string_view text, std::string_view flag = "duration")
{
    const auto [v, unit] = detail::split_unit(text, flag);
    if (unit.empty() || unit == "min") {
        return v;
    }
    if (unit == "h") {
        return v * 60.0;
    }
    if (unit == "s") {
        return v / 60.0;
    }
    throw UsageError(fmt::format("{}: unknown time unit '{}'", flag, unit));
}

// ---------------------------------------------------------------- config

/// Fully resolved parameters of a simulate invocation.
struct SimulateSettings {
    ScenarioConfig base;
    std::vector<std::string> scenarios{"full-novax", "full-vax", "half-novax", "half-vax"};
};

inline std::string_view mode_name(TransmissionMode m) { return m == TransmissionMode::Droplet ? "droplet" : "airborne"; }

inline json settings_to_json(const SimulateSettings &s)
{
    const auto &b = s.base;
    json j;
    j["scenarios"] = s.scenarios;
    j["vaccine_efficacy"] = b.vaccine_efficacy;
    j["horizon_days"] = b.horizon_days;
    j["reps"] = b.reps;
    j["base_seed"] = b.base_seed;
    j["half_class_mode"] = b.half_mode == HalfClassMode::Resample ? "resample" : "fixed";
    j["start_weekday"] = to_string(b.start_weekday);
    j["kernel"] = {{"beta_max_per_s", b.kernel.beta_max},
                   {"sigma_r_m", b.kernel.sigma_r},
                   {"sigma_theta_rad", b.kernel.sigma_theta},
                   {"lambda_per_h", b.kernel.lambda_decay},
                   {"mode", mode_name(b.kernel.mode)}};
    j["disease"] = {{"latency_h", b.disease.latency_hours},
                    {"p_symptomatic", b.disease.p_symptomatic},
                    {"mean_incubation_days", b.disease.mean_incubation_days},
                    {"gamma_per_day", b.disease.gamma_per_day},
                    {"dt_s", b.disease.dt},
                    {"incubation", b.disease.incubation == IncubationModel::Exponential ? "exponential" : "poisson_days"},
                    {"recovery", b.disease.recovery == RecoveryModel::PreSampled ? "presampled" : "per_step"}};
    return j;
}

/// Overlays the keys present in `j` onto `s`.
inline void apply_config(SimulateSettings &s, const json &j)
{
    try {
        auto &b = s.base;
        if (j.contains("scenarios")) {
            s.scenarios = j.at("scenarios").get<std::vector<std::string>>();
        }
        if (j.contains("density_variant") || j.contains("vaccination_variant")) {
            const auto density = j.value("density_variant", std::string("full"));
            const auto vax = j.value("vaccination_variant", std::string("none"));
            if ((density != "full" && density != "half") || (vax != "none" && vax != "teachers")) {
                throw UsageError("unknown density_variant or vaccination_variant");
            }
            s.scenarios = {density + "-" + (vax == "none" ? "novax" : "vax")};
        }
        b.vaccine_efficacy = j.value("vaccine_efficacy", b.vaccine_efficacy);
        b.horizon_days = j.value("horizon_days", b.horizon_days);
        b.reps = j.value("reps", b.reps);
        b.base_seed = j.value("base_seed", b.base_seed);
        if (j.contains("half_class_mode")) {
            const auto m = j.at("half_class_mode").get<std::string>();
            if (m != "resample" && m != "fixed") {
                throw UsageError("half_class_mode must be resample or fixed");
            }
            b.half_mode = m == "resample" ? HalfClassMode::Resample : HalfClassMode::Fixed;
        }
        if (j.contains("start_weekday")) {
            const auto d = parse_weekday(j.at("start_weekday").get<std::string>());
            if (!d) {
                throw UsageError("unknown start_weekday");
            }
            b.start_weekday = *d;
        }
        if (j.contains("kernel")) {
            const auto &k = j.at("kernel");
            b.kernel.beta_max = k.value("beta_max_per_s", b.kernel.beta_max);
            b.kernel.sigma_r = k.value("sigma_r_m", b.kernel.sigma_r);
            b.kernel.sigma_theta = k.value("sigma_theta_rad", b.kernel.sigma_theta);
            b.kernel.lambda_decay = k.value("lambda_per_h", b.kernel.lambda_decay);
            if (k.contains("mode")) {
                const auto m = k.at("mode").get<std::string>();
                if (m != "droplet" && m != "airborne") {
                    throw UsageError("kernel.mode must be droplet or airborne");
                }
                b.kernel.mode = m == "droplet" ? TransmissionMode::Droplet : TransmissionMode::Airborne;
            }
        }
        if (j.contains("disease")) {
            const auto &d = j.at("disease");
            b.disease.latency_hours = d.value("latency_h", b.disease.latency_hours);
            b.disease.p_symptomatic = d.value("p_symptomatic", b.disease.p_symptomatic);
            b.disease.mean_incubation_days = d.value("mean_incubation_days", b.disease.mean_incubation_days);
            b.disease.gamma_per_day = d.value("gamma_per_day", b.disease.gamma_per_day);
            b.disease.dt = d.value("dt_s", b.disease.dt);
            if (d.contains("incubation")) {
                const auto m = d.at("incubation").get<std::string>();
                if (m != "exponential" && m != "poisson_days") {
                    throw UsageError("disease.incubation must be exponential or poisson_days");
                }
                b.disease.incubation = m == "exponential" ? IncubationModel::Exponential : IncubationModel::PoissonDays;
            }
            if (d.contains("recovery")) {
                const auto m = d.at("recovery").get<std::string>();
                if (m != "presampled" && m != "per_step") {
                    throw UsageError("disease.recovery must be presampled or per_step");
                }
                b.disease.recovery = m == "presampled" ? RecoveryModel::PreSampled : RecoveryModel::PerStep;
            }
        }
    } catch (const nlohmann::json::exception &e) {
        throw UsageError(std::string("config: ") + e.what());
    }
}

inline void validate_settings(const SimulateSettings &s)
{
    if (s.scenarios.empty()) {
        throw UsageError("no scenarios requested");
    }
    for (const auto &name : s.scenarios) {
        if (!parse_scenario_name(name)) {
            throw UsageError("unknown scenario '" + name + "'");
        }
    }
    try {
        s.base.validate();
    } catch (const InvalidParameter &e) {
        throw UsageError(e.what());
    }
}

// ---------------------------------------------------------------- digests

inline std::string sha256_file(const std::filesystem::path &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open " + path.string());
    }
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md, &len);
    std::string hex;
    for (unsigned int k = 0; k < len; ++k) {
        hex += fmt::format("{:02x}", md[k]);
    }
    return hex;
}

// ---------------------------------------------------------------- commands

struct CalibrateFlags {
    double r0 = 2.0;
    double gamma = 0.1;
    double contacts = 10.0;
    std::string contact_radius = "6ft";
    std::string contact_duration = "15min";
    std::string sigma_r = "2m";
    std::string sigma_theta = "45deg";
};

inline int cmd_calibrate(const CalibrateFlags &f, std::ostream &out)
{
    CalibrationInputs in;
    in.r0 = f.r0;
    in.gamma_per_day = f.gamma;
    in.n_contacts = f.contacts;
    in.contact_radius_m = parse_length(f.contact_radius, "--contact-radius");
    in.contact_duration_min = parse_minutes(f.contact_duration, "--contact-duration");
    in.sigma_r = parse_length(f.sigma_r, "--sigma-r");
    in.sigma_theta = parse_angle(f.sigma_theta, "--sigma-theta");
    Calibration c;
    try {
        c = calibrate(in);
    } catch (const InvalidParameter &e) {
        throw UsageError(e.what());
    }
    out << fmt::format("rho_daily={:.17g}\n", c.rho_daily);
    out << fmt::format("beta_bar_daily={:.17g}\n", c.beta_bar_daily);
    out << fmt::format("beta_max_per_day={:.17g}\n", c.beta_max_per_day);
    out << fmt::format("beta_max_per_second={:.17g}\n", c.beta_max_per_second());
    return kOk;
}

struct SynthFlags {
    std::size_t children = 12;
    std::size_t teachers = 3;
    std::string room = "8x8";
    std::int64_t session = 10800;
    std::string schedule = "mixed";
    std::int64_t block = 1800;
    std::string speed = "0.2:1.0";
    std::uint64_t seed = 1;
    std::string class_id = "synthetic";
    std::string out;
};

/// "mixed", "structured", "unstructured", or explicit
/// "structured:0:3600,unstructured:3600:10800".
inline std::vector<ScheduleBlock> parse_schedule(std::string_view text, std::int64_t length, std::int64_t block)
{
    if (text == "mixed") {
        if (block <= 0) {
            throw ConfigError("--block must be positive");
        }
        return mixed_schedule(length, block);
    }
    if (const auto regime = parse_activity(text)) {
        return uniform_schedule(length, *regime);
    }
    std::vector<ScheduleBlock> out;
    std::stringstream ss{std::string(text)};
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto a = item.find(':');
        const auto b = item.find(':', a == std::string::npos ? a : a + 1);
        if (a == std::string::npos || b == std::string::npos) {
            throw ConfigError("schedule entries look like regime:start:end");
        }
        const auto regime = parse_activity(item.substr(0, a));
        if (!regime) {
            throw ConfigError("unknown regime in schedule entry '" + item + "'");
        }
        try {
            out.push_back({std::stoll(item.substr(a + 1, b - a - 1)), std::stoll(item.substr(b + 1)), *regime});
        } catch (const std::exception &) {
            throw ConfigError("bad times in schedule entry '" + item + "'");
        }
    }
    return out;
}

inline int cmd_synth(const SynthFlags &f, std::ostream &out)
{
    SynthConfig c;
    c.n_children = f.children;
    c.n_teachers = f.teachers;
    const auto x = f.room.find('x');
    if (x == std::string::npos) {
        throw UsageError("--room must look like WIDTHxHEIGHT");
    }
    c.room_width = parse_length(f.room.substr(0, x), "--room");
    c.room_height = parse_length(f.room.substr(x + 1), "--room");
    c.session_length = f.session;
    const auto colon = f.speed.find(':');
    if (colon == std::string::npos) {
        throw UsageError("--speed must look like MIN:MAX");
    }
    c.speed_min = detail::split_unit(f.speed.substr(0, colon), "--speed").first;
    c.speed_max = detail::split_unit(f.speed.substr(colon + 1), "--speed").first;
    c.seed = f.seed;
    c.class_id = f.class_id;
    Observation obs;
    try {
        c.schedule = parse_schedule(f.schedule, f.session, f.block);
        obs = generate(c);
    } catch (const ConfigError &e) {
        throw UsageError(e.what());
    }
    const std::filesystem::path path(f.out);
    save_observation(obs, path);
    out << fmt::format("track={}\nmeta={}\npeople={}\nroom_area_m2={:.17g}\ndensity={:.17g}\n", path.string(),
                       sidecar_path(path).string(), obs.roster.size(), obs.room_area,
                       density(obs.roster.size(), obs.room_area));
    return kOk;
}

struct FuseFlags {
    std::string in;
    std::string meta;
    std::string out;
};

inline int cmd_fuse(const FuseFlags &f, std::ostream &out)
{
    std::optional<std::filesystem::path> meta;
    if (!f.meta.empty()) {
        meta = f.meta;
    }
    const auto obs = load_observation(f.in, TrackFormat::RawTags, meta);
    save_observation(obs, f.out);
    out << fmt::format("track={}\nmeta={}\nframes={}\npeople={}\n", f.out, sidecar_path(f.out).string(),
                       obs.frames.size(), obs.roster.size());
    return kOk;
}

struct SimulateFlags {
    std::string config;
    std::vector<std::string> observations;
    std::string format = "fused";
    std::string out;
    std::vector<std::string> scenarios;
    std::optional<int> reps;
    std::optional<int> horizon;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    std::string manifest;
};

struct InputFile {
    std::filesystem::path path;
    TrackFormat format = TrackFormat::Fused;
    std::filesystem::path meta_path;
};

inline std::size_t workers_from_env()
{
    if (const char *env = std::getenv(kWorkersEnv)) {
        try {
            const auto v = std::stoul(env);
            if (v > 0) {
                return v;
            }
        } catch (const std::exception &) {
        }
        throw UsageError(std::string(kWorkersEnv) + " must be a positive integer");
    }
    return default_workers();
}

/// Runs every requested scenario over every observation and returns the
/// three CSV documents.
struct SimulationOutputs {
    std::string summary;
    std::string curves;
    std::string emergence;
};

inline SimulationOutputs run_scenarios(const SimulateSettings &settings, const std::vector<Observation> &observations,
                                       std::size_t workers)
{
    std::ostringstream summary;
    std::ostringstream curves;
    std::ostringstream emergence;
    write_summary_header(summary);
    write_curves_header(curves);
    write_emergence_header(emergence);

    std::vector<ReplayContext> contexts;
    contexts.reserve(observations.size());
    for (const auto &obs : observations) {
        contexts.emplace_back(obs, settings.base.kernel, settings.base.disease);
    }
    for (const auto &name : settings.scenarios) {
        auto sc = settings.base;
        std::tie(sc.density, sc.vaccination) = *parse_scenario_name(name);
        for (const auto &ctx : contexts) {
            const auto outcomes = sweep(ctx, sc, workers);
            const auto cal = build_calendar(sc.horizon_days, static_cast<double>(ctx.observation().session_length()),
                                            sc.start_weekday);
            std::optional<std::pair<std::vector<std::size_t>, TransmissionLikelihood>> cached;
            for (const auto &o : outcomes) {
                if (!cached || cached->first != o.members) {
                    cached.emplace(o.members, o.members.size() >= 2
                                                  ? transmission_likelihood(ctx, o.members, cal.size())
                                                  : TransmissionLikelihood{0.0, o.session_length * static_cast<double>(cal.size()), 0.0});
                }
                write_summary_row(summary, summarize(o, cached->second));
            }
            const auto label = observations.size() > 1 ? name + "@" + ctx.observation().class_id : name;
            write_curves_rows(curves, label, aggregate_hourly(outcomes));
            write_emergence_rows(emergence, label, outcomes);
        }
    }
    return {summary.str(), curves.str(), emergence.str()};
}

inline int cmd_simulate(const SimulateFlags &f, std::ostream &out)
{
    SimulateSettings settings;
    std::vector<InputFile> inputs;
    std::map<std::string, std::string> expected_digests;

    if (!f.manifest.empty()) {
        std::ifstream in(f.manifest);
        if (!in) {
            throw UsageError("cannot open manifest " + f.manifest);
        }
        json m;
        try {
            m = json::parse(in);
        } catch (const nlohmann::json::parse_error &e) {
            throw UsageError(std::string("manifest: ") + e.what());
        }
        apply_config(settings, m.at("config"));
        for (const auto &i : m.at("inputs")) {
            InputFile file;
            file.path = i.at("path").get<std::string>();
            file.format = i.at("format").get<std::string>() == "raw" ? TrackFormat::RawTags : TrackFormat::Fused;
            file.meta_path = i.at("meta_path").get<std::string>();
            expected_digests[file.path.string()] = i.at("sha256").get<std::string>();
            expected_digests[file.meta_path.string()] = i.at("meta_sha256").get<std::string>();
            inputs.push_back(file);
        }
    } else {
        if (!f.config.empty()) {
            std::ifstream in(f.config);
            if (!in) {
                throw UsageError("cannot open config " + f.config);
            }
            try {
                apply_config(settings, json::parse(in));
            } catch (const nlohmann::json::parse_error &e) {
                throw UsageError(std::string("config: ") + e.what());
            }
        }
        if (!f.scenarios.empty()) {
            settings.scenarios = f.scenarios;
        }
        if (f.reps) {
            settings.base.reps = *f.reps;
        }
        if (f.horizon) {
            settings.base.horizon_days = *f.horizon;
        }
        if (f.seed) {
            settings.base.base_seed = *f.seed;
        }
        if (f.format != "fused" && f.format != "raw") {
            throw UsageError("--format must be fused or raw");
        }
        if (f.observations.empty()) {
            throw UsageError("at least one --obs is required");
        }
        for (const auto &p : f.observations) {
            InputFile file;
            file.path = p;
            file.format = f.format == "raw" ? TrackFormat::RawTags : TrackFormat::Fused;
            file.meta_path = sidecar_path(file.path);
            inputs.push_back(file);
        }
    }
    validate_settings(settings);
    const auto workers = f.workers.value_or(workers_from_env());
    if (workers == 0) {
        throw UsageError("--workers must be positive");
    }

    json manifest;
    manifest["tool"] = kToolName;
    manifest["version"] = kToolVersion;
    manifest["base_seed"] = settings.base.base_seed;
    manifest["config"] = settings_to_json(settings);
    manifest["inputs"] = json::array();
    std::vector<Observation> observations;
    for (const auto &file : inputs) {
        const auto digest = sha256_file(file.path);
        const auto meta_digest = sha256_file(file.meta_path);
        if (!expected_digests.empty()
            && (expected_digests[file.path.string()] != digest || expected_digests[file.meta_path.string()] != meta_digest)) {
            throw ValidationError("input " + file.path.string() + " does not match the manifest digest");
        }
        observations.push_back(load_observation(file.path, file.format, file.meta_path));
        manifest["inputs"].push_back({{"path", file.path.string()},
                                      {"format", file.format == TrackFormat::Fused ? "fused" : "raw"},
                                      {"sha256", digest},
                                      {"meta_path", file.meta_path.string()},
                                      {"meta_sha256", meta_digest}});
    }
    manifest["outputs"] = {"summary.csv", "curves.csv", "emergence.csv"};

    const auto outputs = run_scenarios(settings, observations, workers);

    // Single writer after reduction; anything written is removed on failure.
    const std::filesystem::path dir(f.out);
    std::filesystem::create_directories(dir);
    const std::vector<std::pair<std::string, std::string>> files = {{"summary.csv", outputs.summary},
                                                                     {"curves.csv", outputs.curves},
                                                                     {"emergence.csv", outputs.emergence},
                                                                     {"manifest.json", manifest.dump(2) + "\n"}};
    try {
        for (const auto &[name, content] : files) {
            std::ofstream o(dir / name, std::ios::binary);
            o << content;
            if (!o) {
                throw Error("failed to write " + (dir / name).string());
            }
        }
    } catch (...) {
        for (const auto &[name, content] : files) {
            std::error_code ec;
            std::filesystem::remove(dir / name, ec);
        }
        throw;
    }
    out << fmt::format("wrote {} runs to {}\n", std::count(outputs.summary.begin(), outputs.summary.end(), '\n') - 1,
                       dir.string());
    return kOk;
}

// ---------------------------------------------------------------- entry point

/// Parses `args` (without the program name) and dispatches. Never throws.
inline int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err)
{
    CLI::App app{"Classroom transmission simulator", std::string(kToolName)};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    CalibrateFlags cal;
    auto *calibrate_cmd = app.add_subcommand("calibrate", "Peak infection rate from contact guidance");
    calibrate_cmd->add_option("--r0", cal.r0, "Basic reproduction number")->capture_default_str();
    calibrate_cmd->add_option("--gamma", cal.gamma, "Recovery rate, per day")->capture_default_str();
    calibrate_cmd->add_option("--contacts", cal.contacts, "Average daily close contacts")->capture_default_str();
    calibrate_cmd->add_option("--contact-radius", cal.contact_radius, "Close-contact radius (m or ft suffix)")
        ->capture_default_str();
    calibrate_cmd->add_option("--contact-duration", cal.contact_duration, "Close-contact time (min, h or s suffix)")
        ->capture_default_str();
    calibrate_cmd->add_option("--sigma-r", cal.sigma_r, "Kernel distance scale (m or ft)")->capture_default_str();
    calibrate_cmd->add_option("--sigma-theta", cal.sigma_theta, "Kernel angle scale (deg or rad)")
        ->capture_default_str();

    SynthFlags syn;
    auto *synth_cmd = app.add_subcommand("synth", "Write a synthetic observation (fused CSV + sidecar)");
    synth_cmd->add_option("--children", syn.children)->capture_default_str();
    synth_cmd->add_option("--teachers", syn.teachers)->capture_default_str();
    synth_cmd->add_option("--room", syn.room, "WIDTHxHEIGHT in meters")->capture_default_str();
    synth_cmd->add_option("--session", syn.session, "Session length, s")->capture_default_str();
    synth_cmd->add_option("--schedule", syn.schedule, "mixed | structured | unstructured | regime:start:end,...")
        ->capture_default_str();
    synth_cmd->add_option("--block", syn.block, "Block length for the mixed schedule, s")->capture_default_str();
    synth_cmd->add_option("--speed", syn.speed, "MIN:MAX walking speed, m/s")->capture_default_str();
    synth_cmd->add_option("--seed", syn.seed)->capture_default_str();
    synth_cmd->add_option("--class-id", syn.class_id)->capture_default_str();
    synth_cmd->add_option("--out", syn.out, "Output fused CSV path")->required();

    FuseFlags fus;
    auto *fuse_cmd = app.add_subcommand("fuse", "Convert a raw dual-tag CSV into a fused CSV");
    fuse_cmd->add_option("--in", fus.in, "Raw-tag CSV")->required();
    fuse_cmd->add_option("--meta", fus.meta, "Sidecar (default: <in>.meta.json)");
    fuse_cmd->add_option("--out", fus.out, "Fused CSV to write")->required();

    SimulateFlags sim;
    auto *simulate_cmd = app.add_subcommand("simulate", "Run scenario sweeps and write summary/curves/emergence CSVs");
    auto *config_opt = simulate_cmd->add_option("--config", sim.config, "Scenario config (JSON)");
    auto *obs_opt = simulate_cmd->add_option("--obs", sim.observations, "Observation track file(s)");
    auto *format_opt = simulate_cmd->add_option("--format", sim.format, "fused | raw")->capture_default_str();
    simulate_cmd->add_option("--out", sim.out, "Output directory")->required();
    auto *scen_opt = simulate_cmd->add_option("--scenarios", sim.scenarios, "full-novax full-vax half-novax half-vax")
                         ->delimiter(',');
    auto *reps_opt = simulate_cmd->add_option("--reps", sim.reps, "Replicates per patient zero");
    auto *horizon_opt = simulate_cmd->add_option("--horizon", sim.horizon, "Horizon, days");
    auto *seed_opt = simulate_cmd->add_option("--seed", sim.seed, "Base seed");
    simulate_cmd->add_option("--workers", sim.workers, std::string("Worker threads (default: $") + kWorkersEnv
                                                           + " or all cores)");
    auto *manifest_opt = simulate_cmd->add_option("--manifest", sim.manifest, "Re-run from a manifest.json");
    for (auto *o : {config_opt, obs_opt, format_opt, scen_opt, reps_opt, horizon_opt, seed_opt}) {
        manifest_opt->excludes(o);
    }

    std::vector<std::string> argv_storage{std::string(kToolName)};
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<char *> argv;
    for (auto &a : argv_storage) {
        argv.push_back(a.data());
    }

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp &) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp &) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::CallForVersion &) {
        out << kToolVersion << '\n';
        return kOk;
    } catch (const CLI::ParseError &e) {
        err << kToolName << ": " << e.what() << '\n';
        return kUsageError;
    }

    try {
        if (*calibrate_cmd) {
            return cmd_calibrate(cal, out);
        }
        if (*synth_cmd) {
            return cmd_synth(syn, out);
        }
        if (*fuse_cmd) {
            return cmd_fuse(fus, out);
        }
        if (*simulate_cmd) {
            return cmd_simulate(sim, out);
        }
    } catch (const UsageError &e) {
        err << kToolName << ": " << e.what() << '\n';
        return kUsageError;
    } catch (const std::exception &e) {
        err << kToolName << ": " << e.what() << '\n';
        return kRuntimeError;
    }
    return kUsageError;
}

} // namespace ctsim::cli

#endif
