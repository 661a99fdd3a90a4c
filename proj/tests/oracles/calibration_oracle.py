"""Independent recomputation of the beta_max calibration chain and a few
kernel/geometry values frozen into the C++ tests."""
import math

FT = 0.3048


def calibrate(r0=2.0, gamma=0.1, n_contacts=10.0, radius_m=6 * FT,
              duration_min=15.0, sigma_r=2.0, sigma_theta=math.pi / 4):
    rho_daily = n_contacts / (math.pi * radius_m ** 2) * (duration_min / (24 * 60))
    beta_bar = r0 * gamma
    beta_max = beta_bar / (sigma_r ** 2 * sigma_theta ** 2 * rho_daily)
    return rho_daily, beta_bar, beta_max


if __name__ == "__main__":
    rho, bbar, bmax = calibrate()
    print(f"rho_daily={rho:.17g}")
    print(f"beta_bar_daily={bbar:.17g}")
    print(f"beta_max_per_day={bmax:.17g}")
    print(f"beta_max_per_second={bmax / 86400:.17g}")
    print(f"double_nc_ratio={bmax / calibrate(n_contacts=20)[2]:.17g}")
    print(f"exp(-1/2)={math.exp(-0.5):.17g}")
    print(f"exp(-3/2)={math.exp(-1.5):.17g}")
    print(f"exp(-0.34)={math.exp(-0.34):.17g}")
    print(f"exp(-1/8)={math.exp(-1/8):.17g}")
    # i at (0,0) facing +x, j at (1,1) facing +x
    d = (1.0, 1.0)
    n = math.hypot(*d)
    ti = math.acos((1 * d[0]) / n)
    tj = math.acos((1 * -d[0]) / n)
    print(f"geom r={n:.17g} ti={ti:.17g} tj={tj:.17g}")
    print(f"density 13/60={13/60:.17g}")
    print(f"synth density 15/64={15/64:.17g}")
