#ifndef CTSIM_KERNEL_HPP
#define CTSIM_KERNEL_HPP

// Pairwise distance/orientation infection kernel and the calibration of its
// peak rate from contact-tracing guidance.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>

#include <ctsim/error.hpp>
#include <ctsim/geometry.hpp>

namespace ctsim {

inline constexpr double kSecondsPerDay = 86400.0;
inline constexpr double kSecondsPerHour = 3600.0;
inline constexpr double kMetersPerFoot = 0.3048;

/// Positions closer than this are treated as sensor artifacts and clamped.
inline constexpr double kMinPairDistance = 0.1;
inline constexpr double kCoincidentEpsilon = 1e-9;

enum class TransmissionMode { Droplet, Airborne };

struct CalibrationInputs {
    double r0 = 2.0;
    double gamma_per_day = 0.1;
    double n_contacts = 10.0;
    double contact_radius_m = 6.0 * kMetersPerFoot;
    double contact_duration_min = 15.0;
    double sigma_r = 2.0;
    double sigma_theta = std::numbers::pi / 4.0;

    void validate() const
    {
        if (!(r0 >= 0.0) || !(gamma_per_day > 0.0) || !(n_contacts > 0.0) || !(contact_radius_m > 0.0)
            || !(contact_duration_min > 0.0) || !(sigma_r > 0.0) || !(sigma_theta > 0.0)) {
            throw InvalidParameter("calibration inputs must be positive (r0 may be zero)");
        }
    }
};

/// Intermediate quantities of the calibration chain.
struct Calibration {
    double rho_daily = 0.0;      // contacts per m^2, weighted by daily contact fraction
    double beta_bar_daily = 0.0; // R0 * gamma, per day
    double beta_max_per_day = 0.0;

    double beta_max_per_second() const noexcept { return beta_max_per_day / kSecondsPerDay; }
};

inline Calibration calibrate(const CalibrationInputs &c)
{
    c.validate();
    Calibration out;
    const double disk = std::numbers::pi * c.contact_radius_m * c.contact_radius_m;
    out.rho_daily = c.n_contacts / disk * (c.contact_duration_min / (24.0 * 60.0));
    out.beta_bar_daily = c.r0 * c.gamma_per_day;
    out.beta_max_per_day = out.beta_bar_daily / (c.sigma_r * c.sigma_r * c.sigma_theta * c.sigma_theta * out.rho_daily);
    return out;
}

/// Peak pairwise rate in per-day units.
inline double calibrate_beta_max(const CalibrationInputs &c) { return calibrate(c).beta_max_per_day; }

struct KernelParams {
    double beta_max = calibrate(CalibrationInputs{}).beta_max_per_second(); // per second
    double sigma_r = 2.0;                                                  // m
    double sigma_theta = std::numbers::pi / 4.0;                           // rad
    double lambda_decay = 0.34;                                            // per hour
    TransmissionMode mode = TransmissionMode::Droplet;

    void validate() const
    {
        // beta_max = 0 is accepted so callers can switch transmission off.
        if (!(beta_max >= 0.0) || !(sigma_r > 0.0) || !(sigma_theta > 0.0) || !(lambda_decay >= 0.0)) {
            throw InvalidParameter("kernel parameters out of range");
        }
    }
};

struct PairGeometry {
    double r = 0.0;       // center-to-center distance, m
    double theta_i = 0.0; // angle between i's facing and the line towards j, [0, pi]
    double theta_j = 0.0; // same for j towards i

    bool operator==(const PairGeometry &) const = default;
};

inline void require_unit(Vec2 v, const char *name)
{
    if (!(std::abs(norm(v) - 1.0) <= 1e-6)) {
        throw InvalidParameter(std::string(name) + " must be a unit vector");
    }
}

/// Distance and the two facing angles for agents i and j.
inline PairGeometry relative_geometry(Vec2 pos_i, Vec2 facing_i, Vec2 pos_j, Vec2 facing_j)
{
    require_unit(facing_i, "facing_i");
    require_unit(facing_j, "facing_j");
    const Vec2 d = pos_j - pos_i;
    const double r = norm(d);
    if (r < kCoincidentEpsilon) {
        throw CoincidentPositions("agents occupy the same position");
    }
    return {r, unsigned_angle(facing_i, d), unsigned_angle(facing_j, -d)};
}

/// relative_geometry() with the distance clamped to r_min. Coincident agents
/// have no defined line between them; both angles are then taken as pi/2.
inline PairGeometry clamped_geometry(Vec2 pos_i, Vec2 facing_i, Vec2 pos_j, Vec2 facing_j,
                                     double r_min = kMinPairDistance) noexcept
{
    const Vec2 d = pos_j - pos_i;
    const double r = norm(d);
    if (r < kCoincidentEpsilon) {
        return {r_min, std::numbers::pi / 2.0, std::numbers::pi / 2.0};
    }
    return {std::max(r, r_min), unsigned_angle(facing_i, d), unsigned_angle(facing_j, -d)};
}

/// Instantaneous infection rate between two agents, per second.
inline double pair_rate(const PairGeometry &g, const KernelParams &p) noexcept
{
    const double radial = g.r * g.r / (2.0 * p.sigma_r * p.sigma_r);
    const double angular = (g.theta_i * g.theta_i + g.theta_j * g.theta_j) / (2.0 * p.sigma_theta * p.sigma_theta);
    return p.beta_max * std::exp(-radial - angular);
}

inline double airborne_decay(double rate, double elapsed_hours, double lambda_decay) noexcept
{
    if (elapsed_hours == 0.0 || lambda_decay == 0.0) {
        return rate;
    }
    return rate * std::exp(-lambda_decay * elapsed_hours);
}

/// People per square meter.
inline double density(std::size_t n_people, double area)
{
    if (!(area > 0.0)) {
        throw ZeroArea("room area must be positive");
    }
    return static_cast<double>(n_people) / area;
}

} // namespace ctsim

#endif
