#ifndef CTSIM_SYNTHGEN_HPP
#define CTSIM_SYNTHGEN_HPP

// Synthetic classroom sessions. Unstructured time is random-waypoint motion;
// structured time seats children in rings around tables with the teachers
// standing at the front of a table.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include <fmt/format.h>

#include <ctsim/error.hpp>
#include <ctsim/geometry.hpp>
#include <ctsim/random.hpp>
#include <ctsim/trajectory.hpp>

namespace ctsim {

struct ScheduleBlock {
    std::int64_t start_s = 0;
    std::int64_t end_s = 0;
    Activity regime = Activity::Unstructured;
};

inline constexpr double kSeatRadius = 0.8;     // m, children around a table
inline constexpr double kTeacherRadius = 1.3;  // m, teacher at the table front
inline constexpr double kSeatJitter = 0.1;     // m, per-axis standard deviation
inline constexpr double kSeatJitterCap = 0.3;  // m, jitter is truncated here
inline constexpr std::size_t kChildrenPerTable = 5;

struct SynthConfig {
    std::size_t n_children = 12;
    std::size_t n_teachers = 3;
    double room_width = 8.0;
    double room_height = 8.0;
    std::int64_t session_length = 10800;
    std::vector<ScheduleBlock> schedule; // must tile [0, session_length)
    double speed_min = 0.2;              // m/s
    double speed_max = 1.0;
    std::uint64_t seed = 1;
    std::string class_id = "synthetic";

    double area() const noexcept { return room_width * room_height; }

    void validate() const
    {
        if (!(room_width > 0.0) || !(room_height > 0.0)) {
            throw ConfigError("room dimensions must be positive");
        }
        if (session_length < 0) {
            throw ConfigError("session length must be non-negative");
        }
        if (!(speed_min > 0.0) || !(speed_max >= speed_min)) {
            throw ConfigError("speed range must satisfy 0 < min <= max");
        }
        std::int64_t cursor = 0;
        for (const auto &b : schedule) {
            if (b.start_s != cursor || b.end_s <= b.start_s) {
                throw ConfigError(fmt::format("schedule block [{}, {}) leaves a gap or overlaps", b.start_s, b.end_s));
            }
            cursor = b.end_s;
        }
        if (cursor != session_length) {
            throw ConfigError("schedule must cover the whole session");
        }
    }
};

/// A single block of one regime covering the session.
inline std::vector<ScheduleBlock> uniform_schedule(std::int64_t length, Activity regime)
{
    if (length <= 0) {
        return {};
    }
    return {{0, length, regime}};
}

/// Alternating blocks of `block` seconds, starting with structured time.
inline std::vector<ScheduleBlock> mixed_schedule(std::int64_t length, std::int64_t block = 1800)
{
    std::vector<ScheduleBlock> out;
    auto regime = Activity::Structured;
    for (std::int64_t t = 0; t < length; t += block) {
        out.push_back({t, std::min(length, t + block), regime});
        regime = regime == Activity::Structured ? Activity::Unstructured : Activity::Structured;
    }
    return out;
}

struct TableLayout {
    std::vector<Vec2> centers;
    std::vector<std::size_t> table_of;   // per roster member
    std::vector<Vec2> anchor;            // seat or front position per roster member
};

/// Tables on a regular grid; children fill tables round-robin, teachers too.
/// Roster order is children first, then teachers.
inline TableLayout table_layout(const SynthConfig &c)
{
    TableLayout out;
    const std::size_t tables = std::max<std::size_t>(1, (c.n_children + kChildrenPerTable - 1) / kChildrenPerTable);
    const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(tables))));
    const auto rows = (tables + cols - 1) / cols;
    for (std::size_t k = 0; k < tables; ++k) {
        out.centers.push_back({(static_cast<double>(k % cols) + 0.5) * c.room_width / static_cast<double>(cols),
                               (static_cast<double>(k / cols) + 0.5) * c.room_height / static_cast<double>(rows)});
    }
    std::vector<std::size_t> seats(tables, 0);
    for (std::size_t i = 0; i < c.n_children; ++i) {
        ++seats[i % tables];
    }
    std::vector<std::size_t> seated(tables, 0);
    for (std::size_t i = 0; i < c.n_children; ++i) {
        const auto t = i % tables;
        const double angle = 2.0 * std::numbers::pi * static_cast<double>(seated[t]++) / static_cast<double>(seats[t]);
        out.table_of.push_back(t);
        out.anchor.push_back(out.centers[t] + unit_from_heading(angle) * kSeatRadius);
    }
    std::vector<std::size_t> standing(tables, 0);
    for (std::size_t i = 0; i < c.n_teachers; ++i) {
        const auto t = i % tables;
        // Front of the table is -y; extra teachers at one table spread sideways.
        const double angle = -std::numbers::pi / 2.0 + 0.5 * static_cast<double>(standing[t]++);
        out.table_of.push_back(t);
        out.anchor.push_back(out.centers[t] + unit_from_heading(angle) * kTeacherRadius);
    }
    return out;
}

namespace detail {

inline Vec2 clamp_to_room(Vec2 p, const SynthConfig &c) noexcept
{
    return {std::clamp(p.x, 0.0, c.room_width), std::clamp(p.y, 0.0, c.room_height)};
}

struct Walker {
    Vec2 pos{};
    Vec2 waypoint{};
    Vec2 facing{1.0, 0.0};
    double speed = 0.0;
};

inline void pick_waypoint(Walker &w, Rng &rng, const SynthConfig &c)
{
    w.waypoint = {rng.uniform(0.0, c.room_width), rng.uniform(0.0, c.room_height)};
    w.speed = rng.uniform(c.speed_min, c.speed_max);
}

inline void walk_one_second(Walker &w, Rng &rng, const SynthConfig &c)
{
    double budget = w.speed;
    for (int guard = 0; guard < 8 && budget > 0.0; ++guard) {
        const Vec2 d = w.waypoint - w.pos;
        const double dist = norm(d);
        if (dist > 1e-12) {
            w.facing = d * (1.0 / dist);
        }
        if (dist > budget) {
            w.pos = w.pos + w.facing * budget;
            break;
        }
        w.pos = w.waypoint;
        budget -= dist;
        pick_waypoint(w, rng, c);
    }
    w.pos = clamp_to_room(w.pos, c);
}

} // namespace detail

/// Deterministic synthetic observation for the given configuration.
inline Observation generate(const SynthConfig &c)
{
    c.validate();
    Rng rng(c.seed);
    Observation obs;
    obs.class_id = c.class_id;
    obs.room_area = c.area();
    for (std::size_t i = 0; i < c.n_children; ++i) {
        obs.roster.push_back({fmt::format("c{:02}", i + 1), Role::Child});
    }
    for (std::size_t i = 0; i < c.n_teachers; ++i) {
        obs.roster.push_back({fmt::format("t{:02}", i + 1), Role::Teacher});
    }
    const auto n = obs.roster.size();
    const auto layout = table_layout(c);

    std::vector<detail::Walker> walkers(n);
    for (auto &w : walkers) {
        w.pos = {rng.uniform(0.0, c.room_width), rng.uniform(0.0, c.room_height)};
        detail::pick_waypoint(w, rng, c);
        const Vec2 d = w.waypoint - w.pos;
        if (norm(d) > 1e-12) {
            w.facing = normalized(d);
        }
    }

    obs.frames.reserve(static_cast<std::size_t>(c.session_length));
    obs.activity.reserve(static_cast<std::size_t>(c.session_length));
    std::size_t block = 0;
    for (std::int64_t t = 0; t < c.session_length; ++t) {
        while (c.schedule[block].end_s <= t) {
            ++block;
        }
        const auto regime = c.schedule[block].regime;
        TrajectoryFrame frame;
        frame.t = t;
        frame.poses.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            auto &w = walkers[i];
            if (regime == Activity::Unstructured) {
                if (t > 0) {
                    detail::walk_one_second(w, rng, c);
                }
            } else {
                const Vec2 jitter{std::clamp(rng.normal() * kSeatJitter, -kSeatJitterCap, kSeatJitterCap),
                                  std::clamp(rng.normal() * kSeatJitter, -kSeatJitterCap, kSeatJitterCap)};
                w.pos = detail::clamp_to_room(layout.anchor[i] + jitter, c);
                const Vec2 to_center = layout.centers[layout.table_of[i]] - w.pos;
                if (norm(to_center) > 1e-12) {
                    w.facing = normalized(to_center);
                }
                // Leave the table towards a fresh waypoint when free play starts.
                detail::pick_waypoint(w, rng, c);
            }
            frame.poses[i] = {true, w.pos, w.facing};
        }
        obs.frames.push_back(std::move(frame));
        obs.activity.push_back(regime);
    }
    return obs;
}

} // namespace ctsim

#endif
