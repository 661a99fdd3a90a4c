#ifndef CTSIM_TRAJECTORY_HPP
#define CTSIM_TRAJECTORY_HPP

// Classroom observations: roster, 1 Hz pose frames and activity labels, plus
// the dual-tag fusion and resampling used to build them from raw tracks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <ctsim/error.hpp>
#include <ctsim/geometry.hpp>

namespace ctsim {

enum class Role { Child, Teacher };
enum class TagSide { Left, Right };
enum class Activity { Structured, Unstructured };

inline std::string_view to_string(Role r) noexcept { return r == Role::Child ? "child" : "teacher"; }
inline std::string_view to_string(Activity a) noexcept
{
    return a == Activity::Structured ? "structured" : "unstructured";
}

inline std::optional<Role> parse_role(std::string_view s)
{
    if (s == "child") {
        return Role::Child;
    }
    if (s == "teacher") {
        return Role::Teacher;
    }
    return std::nullopt;
}

inline std::optional<Activity> parse_activity(std::string_view s)
{
    if (s == "structured") {
        return Activity::Structured;
    }
    if (s == "unstructured") {
        return Activity::Unstructured;
    }
    return std::nullopt;
}

struct Person {
    std::string id;
    Role role = Role::Child;

    bool operator==(const Person &) const = default;
};

/// Position and facing of one person in one second. Absent poses are kept in
/// canonical form (origin, facing +x) so that frames compare by value.
struct Pose {
    bool present = false;
    Vec2 pos{};
    Vec2 facing{1.0, 0.0};

    static Pose absent() noexcept { return {}; }
    bool operator==(const Pose &) const = default;
};

struct TrajectoryFrame {
    std::int64_t t = 0;       // seconds since session start
    std::vector<Pose> poses;  // indexed like Observation::roster

    bool operator==(const TrajectoryFrame &) const = default;
};

struct Observation {
    std::string class_id;
    std::vector<Person> roster;
    double room_area = 0.0; // m^2
    std::vector<TrajectoryFrame> frames;
    /// Per-second labels; empty when the session is unlabeled.
    std::vector<std::optional<Activity>> activity;

    std::int64_t session_length() const noexcept { return static_cast<std::int64_t>(frames.size()); }

    std::optional<std::size_t> index_of(std::string_view id) const noexcept
    {
        for (std::size_t k = 0; k < roster.size(); ++k) {
            if (roster[k].id == id) {
                return k;
            }
        }
        return std::nullopt;
    }

    std::size_t count(Role role) const noexcept
    {
        return static_cast<std::size_t>(
            std::count_if(roster.begin(), roster.end(), [role](const Person &p) { return p.role == role; }));
    }

    /// Throws ValidationError on any structural inconsistency.
    void validate() const
    {
        for (std::size_t a = 0; a < roster.size(); ++a) {
            for (std::size_t b = a + 1; b < roster.size(); ++b) {
                if (roster[a].id == roster[b].id) {
                    throw ValidationError("duplicate person id '" + roster[a].id + "'");
                }
            }
        }
        if (!(room_area > 0.0) || !std::isfinite(room_area)) {
            throw ValidationError("room area must be positive");
        }
        for (std::size_t k = 0; k < frames.size(); ++k) {
            const auto &f = frames[k];
            if (k > 0 && f.t != frames[k - 1].t + 1) {
                throw ValidationError("frames must advance by exactly 1 s (at t=" + std::to_string(f.t) + ")");
            }
            if (f.poses.size() != roster.size()) {
                throw ValidationError("frame at t=" + std::to_string(f.t) + " does not match roster size");
            }
            for (const auto &p : f.poses) {
                if (!p.present) {
                    if (!(p == Pose::absent())) {
                        throw ValidationError("absent pose carries a position at t=" + std::to_string(f.t));
                    }
                    continue;
                }
                if (!std::isfinite(p.pos.x) || !std::isfinite(p.pos.y)) {
                    throw ValidationError("non-finite position at t=" + std::to_string(f.t));
                }
                if (std::abs(norm(p.facing) - 1.0) > 1e-6) {
                    throw ValidationError("facing is not unit norm at t=" + std::to_string(f.t));
                }
            }
        }
        if (!activity.empty() && activity.size() != frames.size()) {
            throw ValidationError("activity labels must cover every frame");
        }
    }

    bool operator==(const Observation &) const = default;
};

struct TagSample {
    double t = 0.0; // seconds since session start
    std::string person_id;
    TagSide side = TagSide::Left;
    double x = 0.0;
    double y = 0.0;
};

/// A fused (centroid, facing) sample at an arbitrary time.
struct TrackSample {
    double t = 0.0;
    Vec2 pos{};
    Vec2 facing{1.0, 0.0};
};

struct FusionResult {
    std::vector<TrackSample> track;
    /// Tag samples with no partner on the other side within the pairing window.
    std::size_t unpaired = 0;
};

inline constexpr double kTagPairingWindow = 0.5; // s
inline constexpr double kMaxInterpolationGap = 5.0; // s

/// Facing of a person whose left hip tag is at `left` and right hip tag at
/// `right`: the left-to-right vector turned 90 degrees counter-clockwise.
/// Empty when the tags coincide.
inline std::optional<Vec2> facing_from_tags(Vec2 left, Vec2 right) noexcept
{
    const Vec2 d = right - left;
    if (norm(d) < 1e-9) {
        return std::nullopt;
    }
    return normalized(rotate_ccw90(d));
}

/// Pairs each left sample with the nearest right sample within 0.5 s and
/// returns the centroid/facing track. Both inputs must be time-sorted.
inline FusionResult fuse_tags(std::span<const TagSample> left, std::span<const TagSample> right)
{
    FusionResult out;
    std::vector<bool> right_used(right.size(), false);
    std::vector<bool> facing_known;
    std::size_t cursor = 0;

    for (const auto &l : left) {
        while (cursor + 1 < right.size() && right[cursor + 1].t <= l.t) {
            ++cursor;
        }
        std::optional<std::size_t> best;
        for (std::size_t k = cursor; k < right.size() && k <= cursor + 1; ++k) {
            const double dt = std::abs(right[k].t - l.t);
            if (dt <= kTagPairingWindow && (!best || dt < std::abs(right[*best].t - l.t))) {
                best = k;
            }
        }
        if (!best) {
            ++out.unpaired;
            continue;
        }
        const auto &r = right[*best];
        right_used[*best] = true;
        const Vec2 lp{l.x, l.y};
        const Vec2 rp{r.x, r.y};
        const auto facing = facing_from_tags(lp, rp);
        TrackSample s;
        s.t = 0.5 * (l.t + r.t);
        s.pos = (lp + rp) * 0.5;
        if (facing) {
            s.facing = *facing;
        } else if (!out.track.empty()) {
            s.facing = out.track.back().facing;
        }
        facing_known.push_back(facing.has_value() || (!out.track.empty() && facing_known.back()));
        out.track.push_back(s);
    }
    out.unpaired += static_cast<std::size_t>(std::count(right_used.begin(), right_used.end(), false));

    // Degenerate samples before the first valid facing take that facing.
    const auto first_known = std::find(facing_known.begin(), facing_known.end(), true);
    if (first_known != facing_known.end()) {
        const auto k = static_cast<std::size_t>(first_known - facing_known.begin());
        for (std::size_t j = 0; j < k; ++j) {
            out.track[j].facing = out.track[k].facing;
        }
    }
    return out;
}

/// Per-second poses for the integer grid [grid_begin, grid_end].
struct UniformTrack {
    std::int64_t t0 = 0;
    std::vector<Pose> poses;
};

/// Linear position / shortest-arc facing interpolation onto integer seconds.
/// Seconds outside the track, or inside a gap longer than 5 s, are absent.
inline UniformTrack resample(std::span<const TrackSample> track, std::int64_t grid_begin, std::int64_t grid_end)
{
    if (track.empty()) {
        throw EmptyTrack("cannot resample an empty track");
    }
    UniformTrack out;
    out.t0 = grid_begin;
    if (grid_end < grid_begin) {
        return out;
    }
    out.poses.reserve(static_cast<std::size_t>(grid_end - grid_begin + 1));
    std::size_t k = 0;
    for (std::int64_t t = grid_begin; t <= grid_end; ++t) {
        const auto tg = static_cast<double>(t);
        while (k < track.size() && track[k].t < tg) {
            ++k;
        }
        if (k < track.size() && track[k].t == tg) {
            out.poses.push_back({true, track[k].pos, track[k].facing});
            continue;
        }
        if (k == 0 || k == track.size()) {
            out.poses.push_back(Pose::absent());
            continue;
        }
        const auto &a = track[k - 1];
        const auto &b = track[k];
        const double span = b.t - a.t;
        if (span > kMaxInterpolationGap) {
            out.poses.push_back(Pose::absent());
            continue;
        }
        const double f = (tg - a.t) / span;
        const double ha = heading(a.facing);
        const double h = ha + f * wrap_angle(heading(b.facing) - ha);
        out.poses.push_back({true, a.pos + (b.pos - a.pos) * f, unit_from_heading(h)});
    }
    return out;
}

/// Resamples over the track's own integer span.
inline UniformTrack resample(std::span<const TrackSample> track)
{
    if (track.empty()) {
        throw EmptyTrack("cannot resample an empty track");
    }
    return resample(track, static_cast<std::int64_t>(std::ceil(track.front().t)),
                    static_cast<std::int64_t>(std::floor(track.back().t)));
}

/// Copy of `obs` restricted to the given roster indices (in that order).
inline Observation subset(const Observation &obs, std::span<const std::size_t> members)
{
    Observation out;
    out.class_id = obs.class_id;
    out.room_area = obs.room_area;
    out.activity = obs.activity;
    out.roster.reserve(members.size());
    for (auto m : members) {
        out.roster.push_back(obs.roster.at(m));
    }
    out.frames.reserve(obs.frames.size());
    for (const auto &f : obs.frames) {
        TrajectoryFrame g;
        g.t = f.t;
        g.poses.reserve(members.size());
        for (auto m : members) {
            g.poses.push_back(f.poses[m]);
        }
        out.frames.push_back(std::move(g));
    }
    return out;
}

} // namespace ctsim

#endif
