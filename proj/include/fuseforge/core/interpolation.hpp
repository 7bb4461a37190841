#pragma once

namespace fuseforge {

/// 1-D linear interpolation between values at a and b; f in [0, 1].
inline double lerp(double va, double vb, double f) {
    return va * (1.0 - f) + vb * f;
}

/// Bilinear interpolation over a unit cell.
/// v00 = value at (0,0), v10 = (1,0), v01 = (0,1), v11 = (1,1).
inline double bilerp(double v00, double v10, double v01, double v11, double fx, double fy) {
    return lerp(lerp(v00, v10, fx), lerp(v01, v11, fx), fy);
}

/// Trilinear interpolation over a unit cell; corner order v[z][y][x] flattened
/// as v000, v100, v010, v110, v001, v101, v011, v111.
inline double trilerp(const double v[8], double fx, double fy, double fz) {
    const double lo = bilerp(v[0], v[1], v[2], v[3], fx, fy);
    const double hi = bilerp(v[4], v[5], v[6], v[7], fx, fy);
    return lerp(lo, hi, fz);
}

}  // namespace fuseforge
