#ifndef CTSIM_OBSERVATION_IO_HPP
#define CTSIM_OBSERVATION_IO_HPP

// Fused and raw-tag CSV readers/writers and the JSON metadata sidecar.
//
// Fused CSV:   t_s,person_id,role,present,x_m,y_m,facing_x,facing_y
// Raw-tag CSV: t_s,person_id,role,side,x_m,y_m
// Sidecar:     <stem>.meta.json with class_id, room_area_m2 and optionally
//              session_length_s, roster [{person_id, role}] and
//              activity [{start_s, end_s, label}].

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include <ctsim/error.hpp>
#include <ctsim/trajectory.hpp>

namespace ctsim {

enum class TrackFormat { RawTags, Fused };

inline constexpr std::string_view kFusedHeader = "t_s,person_id,role,present,x_m,y_m,facing_x,facing_y";
inline constexpr std::string_view kRawHeader = "t_s,person_id,role,side,x_m,y_m";

namespace detail {

struct CsvField {
    std::string_view text;
    std::size_t column; // 1-based character column
};

inline std::vector<CsvField> split_csv_line(std::string_view line)
{
    std::vector<CsvField> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        const auto end = comma == std::string_view::npos ? line.size() : comma;
        out.push_back({line.substr(start, end - start), start + 1});
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

/// Parsed CSV with named columns. Data lines keep their 1-based line numbers.
struct CsvTable {
    std::map<std::string, std::size_t, std::less<>> columns;
    struct Row {
        std::size_t line;
        std::vector<CsvField> fields;
    };
    std::vector<Row> rows;
    std::vector<std::string> storage;

    const CsvField &at(const Row &row, std::string_view name) const { return row.fields[columns.find(name)->second]; }
};

inline CsvTable read_csv(const std::filesystem::path &path, std::string_view expected_header)
{
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open " + path.string());
    }
    CsvTable table;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    std::vector<std::string> lines;
    std::vector<std::size_t> numbers;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        if (!have_header) {
            const auto header = split_csv_line(line);
            for (std::size_t k = 0; k < header.size(); ++k) {
                table.columns.emplace(std::string(header[k].text), k);
            }
            for (const auto &field : split_csv_line(expected_header)) {
                if (!table.columns.contains(field.text)) {
                    throw SchemaError(fmt::format("{}: missing column '{}'", path.string(), field.text));
                }
            }
            have_header = true;
            continue;
        }
        lines.push_back(line);
        numbers.push_back(line_no);
    }
    if (!have_header) {
        throw SchemaError(path.string() + ": missing header");
    }
    table.storage = std::move(lines);
    table.rows.reserve(table.storage.size());
    for (std::size_t k = 0; k < table.storage.size(); ++k) {
        auto fields = split_csv_line(table.storage[k]);
        if (fields.size() != table.columns.size()) {
            throw ParseError(numbers[k], 1,
                             fmt::format("expected {} fields, found {}", table.columns.size(), fields.size()));
        }
        table.rows.push_back({numbers[k], std::move(fields)});
    }
    return table;
}

inline double parse_double(const CsvField &f, std::size_t line)
{
    double v = 0.0;
    const auto *first = f.text.data();
    const auto *last = first + f.text.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || !std::isfinite(v)) {
        throw ParseError(line, f.column, fmt::format("'{}' is not a finite number", f.text));
    }
    return v;
}

inline std::int64_t parse_int(const CsvField &f, std::size_t line)
{
    std::int64_t v = 0;
    const auto *first = f.text.data();
    const auto *last = first + f.text.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last) {
        throw ParseError(line, f.column, fmt::format("'{}' is not an integer", f.text));
    }
    return v;
}

inline Role parse_role_field(const CsvField &f, std::size_t line)
{
    const auto role = parse_role(f.text);
    if (!role) {
        throw ParseError(line, f.column, fmt::format("unknown role '{}'", f.text));
    }
    return *role;
}

inline std::string fmt_double(double v) { return fmt::format("{:.17g}", v + 0.0); } // no "-0"

} // namespace detail

/// Sidecar contents, independent of the track file.
struct ObservationMeta {
    std::string class_id;
    double room_area = 0.0;
    std::optional<std::int64_t> session_length;
    std::vector<Person> roster; // empty: derive from the track file
    struct Interval {
        std::int64_t start_s;
        std::int64_t end_s;
        Activity label;
    };
    std::vector<Interval> activity;
};

inline std::filesystem::path sidecar_path(const std::filesystem::path &track_path)
{
    auto p = track_path;
    p.replace_extension(".meta.json");
    return p;
}

inline ObservationMeta read_meta(const std::filesystem::path &path)
{
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("missing metadata sidecar " + path.string());
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error &e) {
        throw ParseError(0, e.byte, path.string() + ": " + e.what());
    }
    ObservationMeta meta;
    try {
        meta.class_id = j.at("class_id").get<std::string>();
        meta.room_area = j.at("room_area_m2").get<double>();
        if (j.contains("session_length_s")) {
            meta.session_length = j.at("session_length_s").get<std::int64_t>();
        }
        for (const auto &p : j.value("roster", nlohmann::json::array())) {
            const auto role = parse_role(p.at("role").get<std::string>());
            if (!role) {
                throw SchemaError(path.string() + ": unknown role in roster");
            }
            meta.roster.push_back({p.at("person_id").get<std::string>(), *role});
        }
        for (const auto &a : j.value("activity", nlohmann::json::array())) {
            const auto label = parse_activity(a.at("label").get<std::string>());
            if (!label) {
                throw SchemaError(path.string() + ": unknown activity label");
            }
            meta.activity.push_back({a.at("start_s").get<std::int64_t>(), a.at("end_s").get<std::int64_t>(), *label});
        }
    } catch (const nlohmann::json::exception &e) {
        throw SchemaError(path.string() + ": " + e.what());
    }
    return meta;
}

/// Collapses per-second labels into [start, end) intervals.
inline std::vector<ObservationMeta::Interval> activity_intervals(const Observation &obs)
{
    std::vector<ObservationMeta::Interval> out;
    for (std::size_t k = 0; k < obs.activity.size(); ++k) {
        const auto &label = obs.activity[k];
        if (!label) {
            continue;
        }
        const auto t = obs.frames[k].t;
        if (!out.empty() && out.back().end_s == t && out.back().label == *label) {
            out.back().end_s = t + 1;
        } else {
            out.push_back({t, t + 1, *label});
        }
    }
    return out;
}

inline void write_meta(const Observation &obs, const std::filesystem::path &path)
{
    nlohmann::ordered_json j;
    j["class_id"] = obs.class_id;
    j["room_area_m2"] = obs.room_area;
    j["session_length_s"] = obs.session_length();
    j["roster"] = nlohmann::ordered_json::array();
    for (const auto &p : obs.roster) {
        j["roster"].push_back({{"person_id", p.id}, {"role", to_string(p.role)}});
    }
    j["activity"] = nlohmann::ordered_json::array();
    for (const auto &a : activity_intervals(obs)) {
        j["activity"].push_back({{"start_s", a.start_s}, {"end_s", a.end_s}, {"label", to_string(a.label)}});
    }
    std::ofstream out(path);
    out << j.dump(2) << '\n';
    if (!out) {
        throw Error("failed to write " + path.string());
    }
}

namespace detail {

inline std::vector<Person> merge_roster(const ObservationMeta &meta, const std::vector<Person> &seen)
{
    if (meta.roster.empty()) {
        return seen;
    }
    for (const auto &p : seen) {
        const auto it = std::find_if(meta.roster.begin(), meta.roster.end(),
                                     [&](const Person &q) { return q.id == p.id; });
        if (it == meta.roster.end()) {
            throw ValidationError("person '" + p.id + "' is not in the roster");
        }
        if (it->role != p.role) {
            throw ValidationError("person '" + p.id + "' has conflicting roles");
        }
    }
    return meta.roster;
}

inline void note_person(std::vector<Person> &seen, std::map<std::string, std::size_t, std::less<>> &index,
                        std::string_view id, Role role, std::size_t line)
{
    const auto it = index.find(id);
    if (it == index.end()) {
        index.emplace(std::string(id), seen.size());
        seen.push_back({std::string(id), role});
    } else if (seen[it->second].role != role) {
        throw ValidationError(fmt::format("line {}: person '{}' changes role", line, id));
    }
}

inline void apply_meta(Observation &obs, const ObservationMeta &meta)
{
    obs.class_id = meta.class_id;
    obs.room_area = meta.room_area;
    if (meta.activity.empty()) {
        return;
    }
    obs.activity.assign(obs.frames.size(), std::nullopt);
    for (const auto &a : meta.activity) {
        if (a.end_s < a.start_s) {
            throw ValidationError("activity interval ends before it starts");
        }
        for (auto t = std::max<std::int64_t>(a.start_s, 0); t < a.end_s; ++t) {
            if (t < static_cast<std::int64_t>(obs.frames.size())) {
                obs.activity[static_cast<std::size_t>(t)] = a.label;
            }
        }
    }
}

inline Observation load_fused(const std::filesystem::path &path, const ObservationMeta &meta)
{
    const auto table = read_csv(path, kFusedHeader);
    std::vector<Person> seen;
    std::map<std::string, std::size_t, std::less<>> seen_index;
    struct Row {
        std::int64_t t;
        std::size_t person;
        Pose pose;
    };
    std::vector<Row> rows;
    std::int64_t max_t = -1;
    for (const auto &row : table.rows) {
        const auto line = row.line;
        const auto t = parse_int(table.at(row, "t_s"), line);
        if (t < 0) {
            throw ParseError(line, table.at(row, "t_s").column, "negative time");
        }
        const auto &id = table.at(row, "person_id");
        if (id.text.empty()) {
            throw ParseError(line, id.column, "empty person_id");
        }
        note_person(seen, seen_index, id.text, parse_role_field(table.at(row, "role"), line), line);
        const auto present = parse_int(table.at(row, "present"), line);
        if (present != 0 && present != 1) {
            throw ParseError(line, table.at(row, "present").column, "present must be 0 or 1");
        }
        Pose pose;
        if (present == 1) {
            pose.present = true;
            pose.pos = {parse_double(table.at(row, "x_m"), line), parse_double(table.at(row, "y_m"), line)};
            pose.facing = {parse_double(table.at(row, "facing_x"), line),
                           parse_double(table.at(row, "facing_y"), line)};
        }
        rows.push_back({t, seen_index.find(id.text)->second, pose});
        max_t = std::max(max_t, t);
    }

    Observation obs;
    obs.roster = merge_roster(meta, seen);
    const auto length = meta.session_length.value_or(max_t + 1);
    if (max_t >= length) {
        throw ValidationError("rows extend beyond session_length_s");
    }
    obs.frames.resize(static_cast<std::size_t>(length));
    for (std::int64_t t = 0; t < length; ++t) {
        obs.frames[static_cast<std::size_t>(t)].t = t;
        obs.frames[static_cast<std::size_t>(t)].poses.assign(obs.roster.size(), Pose::absent());
    }
    std::vector<std::size_t> to_roster(seen.size());
    for (std::size_t k = 0; k < seen.size(); ++k) {
        to_roster[k] = *obs.index_of(seen[k].id);
    }
    for (const auto &r : rows) {
        obs.frames[static_cast<std::size_t>(r.t)].poses[to_roster[r.person]] = r.pose;
    }
    apply_meta(obs, meta);
    return obs;
}

inline Observation load_raw(const std::filesystem::path &path, const ObservationMeta &meta)
{
    const auto table = read_csv(path, kRawHeader);
    std::vector<Person> seen;
    std::map<std::string, std::size_t, std::less<>> seen_index;
    std::vector<std::vector<TagSample>> lefts;
    std::vector<std::vector<TagSample>> rights;
    double max_t = -1.0;
    for (const auto &row : table.rows) {
        const auto line = row.line;
        TagSample s;
        s.t = parse_double(table.at(row, "t_s"), line);
        if (s.t < 0.0) {
            throw ParseError(line, table.at(row, "t_s").column, "negative time");
        }
        const auto &id = table.at(row, "person_id");
        if (id.text.empty()) {
            throw ParseError(line, id.column, "empty person_id");
        }
        note_person(seen, seen_index, id.text, parse_role_field(table.at(row, "role"), line), line);
        const auto &side = table.at(row, "side");
        if (side.text == "L") {
            s.side = TagSide::Left;
        } else if (side.text == "R") {
            s.side = TagSide::Right;
        } else {
            throw ParseError(line, side.column, fmt::format("side must be L or R, got '{}'", side.text));
        }
        s.person_id = std::string(id.text);
        s.x = parse_double(table.at(row, "x_m"), line);
        s.y = parse_double(table.at(row, "y_m"), line);
        const auto k = seen_index.find(id.text)->second;
        lefts.resize(seen.size());
        rights.resize(seen.size());
        (s.side == TagSide::Left ? lefts : rights)[k].push_back(s);
        max_t = std::max(max_t, s.t);
    }

    Observation obs;
    obs.roster = merge_roster(meta, seen);
    const auto length = meta.session_length.value_or(static_cast<std::int64_t>(std::floor(max_t)) + 1);
    obs.frames.resize(static_cast<std::size_t>(std::max<std::int64_t>(length, 0)));
    for (std::size_t t = 0; t < obs.frames.size(); ++t) {
        obs.frames[t].t = static_cast<std::int64_t>(t);
        obs.frames[t].poses.assign(obs.roster.size(), Pose::absent());
    }
    const auto by_time = [](const TagSample &a, const TagSample &b) { return a.t < b.t; };
    for (std::size_t k = 0; k < seen.size(); ++k) {
        std::stable_sort(lefts[k].begin(), lefts[k].end(), by_time);
        std::stable_sort(rights[k].begin(), rights[k].end(), by_time);
        const auto fused = fuse_tags(lefts[k], rights[k]);
        if (fused.track.empty() || obs.frames.empty()) {
            continue;
        }
        const auto uniform = resample(fused.track, 0, static_cast<std::int64_t>(obs.frames.size()) - 1);
        const auto r = *obs.index_of(seen[k].id);
        for (std::size_t t = 0; t < uniform.poses.size(); ++t) {
            obs.frames[t].poses[r] = uniform.poses[t];
        }
    }
    apply_meta(obs, meta);
    return obs;
}

} // namespace detail

/// Reads a track file plus its sidecar and returns a validated observation.
/// RawTags input is fused and resampled onto the 1 Hz grid.
inline Observation load_observation(const std::filesystem::path &path, TrackFormat format,
                                    std::optional<std::filesystem::path> meta_path = std::nullopt)
{
    const auto meta = read_meta(meta_path.value_or(sidecar_path(path)));
    auto obs = format == TrackFormat::Fused ? detail::load_fused(path, meta) : detail::load_raw(path, meta);
    obs.validate();
    return obs;
}

inline void write_fused_csv(const Observation &obs, std::ostream &out)
{
    out << kFusedHeader << '\n';
    for (const auto &f : obs.frames) {
        for (std::size_t k = 0; k < obs.roster.size(); ++k) {
            const auto &p = f.poses[k];
            const auto &who = obs.roster[k];
            if (p.present) {
                out << fmt::format("{},{},{},1,{},{},{},{}\n", f.t, who.id, to_string(who.role),
                                   detail::fmt_double(p.pos.x), detail::fmt_double(p.pos.y),
                                   detail::fmt_double(p.facing.x), detail::fmt_double(p.facing.y));
            } else {
                out << fmt::format("{},{},{},0,,,,\n", f.t, who.id, to_string(who.role));
            }
        }
    }
}

/// Writes `<path>` (fused CSV) and its `.meta.json` sidecar.
inline void save_observation(const Observation &obs, const std::filesystem::path &path)
{
    {
        std::ofstream out(path);
        write_fused_csv(obs, out);
        if (!out) {
            throw Error("failed to write " + path.string());
        }
    }
    write_meta(obs, sidecar_path(path));
}

inline void write_raw_csv(std::span<const TagSample> samples, const std::vector<Person> &roster, std::ostream &out)
{
    out << kRawHeader << '\n';
    for (const auto &s : samples) {
        const auto it = std::find_if(roster.begin(), roster.end(), [&](const Person &p) { return p.id == s.person_id; });
        if (it == roster.end()) {
            throw ValidationError("tag sample for unknown person '" + s.person_id + "'");
        }
        out << fmt::format("{},{},{},{},{},{}\n", detail::fmt_double(s.t), s.person_id, to_string(it->role),
                           s.side == TagSide::Left ? "L" : "R", detail::fmt_double(s.x), detail::fmt_double(s.y));
    }
}

} // namespace ctsim

#endif
