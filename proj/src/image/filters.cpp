#include "fuseforge/image/filters.hpp"

#include <cmath>

#include <Eigen/Geometry>

#include "fuseforge/core/errors.hpp"
#include "fuseforge/core/parallel.hpp"

namespace fuseforge {

namespace {

// 1-D binomial factor of the 5x5 kernel; outer product sums to 256.
constexpr double kBinomial5[5] = {1.0, 4.0, 6.0, 4.0, 1.0};

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

}  // namespace

DepthImage bilateral_filter(const DepthImage& depth, double sigma_spatial, double sigma_range,
                            int radius) {
    if (sigma_spatial <= 0.0 || sigma_range <= 0.0) {
        throw Error("bilateral_filter: sigmas must be positive");
    }
    DepthImage out(depth.width(), depth.height());
    const double inv2ss = 1.0 / (2.0 * sigma_spatial * sigma_spatial);
    const double inv2sr = 1.0 / (2.0 * sigma_range * sigma_range);
    parallel_for_rows(0, depth.height(), [&](int y0, int y1) {
        for (int y = y0; y < y1; ++y) {
            for (int x = 0; x < depth.width(); ++x) {
                const float center = depth.at(x, y);
                if (center <= 0.0f) {
                    out.at(x, y) = 0.0f;
                    continue;
                }
                double sum = 0.0;
                double weight = 0.0;
                for (int dy = -radius; dy <= radius; ++dy) {
                    for (int dx = -radius; dx <= radius; ++dx) {
                        const int nx = x + dx;
                        const int ny = y + dy;
                        if (!depth.in_bounds(nx, ny)) continue;
                        const float d = depth.at(nx, ny);
                        if (d <= 0.0f) continue;
                        const double range = double(d) - double(center);
                        const double w = std::exp(-(dx * dx + dy * dy) * inv2ss -
                                                  range * range * inv2sr);
                        sum += w * d;
                        weight += w;
                    }
                }
                out.at(x, y) = weight > 0.0 ? float(sum / weight) : 0.0f;
            }
        }
    });
    return out;
}

IntensityImage gaussian_blur(const IntensityImage& img) {
    if (img.width() < 5 || img.height() < 5) {
        throw Error("gaussian_blur: image smaller than the 5x5 kernel");
    }
    // Separable passes, clamp-to-edge.
    IntensityImage tmp(img.width(), img.height());
    IntensityImage out(img.width(), img.height());
    parallel_for_rows(0, img.height(), [&](int y0, int y1) {
        for (int y = y0; y < y1; ++y) {
            for (int x = 0; x < img.width(); ++x) {
                double s = 0.0;
                for (int k = -2; k <= 2; ++k) {
                    s += kBinomial5[k + 2] * img.at(clampi(x + k, 0, img.width() - 1), y);
                }
                tmp.at(x, y) = float(s / 16.0);
            }
        }
    });
    parallel_for_rows(0, img.height(), [&](int y0, int y1) {
        for (int y = y0; y < y1; ++y) {
            for (int x = 0; x < img.width(); ++x) {
                double s = 0.0;
                for (int k = -2; k <= 2; ++k) {
                    s += kBinomial5[k + 2] * tmp.at(x, clampi(y + k, 0, img.height() - 1));
                }
                out.at(x, y) = float(s / 16.0);
            }
        }
    });
    return out;
}

DepthImage gaussian_blur_depth(const DepthImage& depth) {
    if (depth.width() < 5 || depth.height() < 5) {
        throw Error("gaussian_blur_depth: image smaller than the 5x5 kernel");
    }
    DepthImage out(depth.width(), depth.height());
    parallel_for_rows(0, depth.height(), [&](int y0, int y1) {
        for (int y = y0; y < y1; ++y) {
            for (int x = 0; x < depth.width(); ++x) {
                if (depth.at(x, y) <= 0.0f) {
                    out.at(x, y) = 0.0f;
                    continue;
                }
                double sum = 0.0;
                double weight = 0.0;
                for (int ky = -2; ky <= 2; ++ky) {
                    for (int kx = -2; kx <= 2; ++kx) {
                        const int nx = clampi(x + kx, 0, depth.width() - 1);
                        const int ny = clampi(y + ky, 0, depth.height() - 1);
                        const float d = depth.at(nx, ny);
                        if (d <= 0.0f) continue;
                        const double w = kBinomial5[kx + 2] * kBinomial5[ky + 2];
                        sum += w * d;
                        weight += w;
                    }
                }
                out.at(x, y) = weight > 0.0 ? float(sum / weight) : 0.0f;
            }
        }
    });
    return out;
}

NormalMap compute_normals(const DepthImage& depth, const PinholeIntrinsics& intr, int step) {
    if (step < 1 || step > 5) {
        throw Error("compute_normals: step must be in [1, 5]");
    }
    NormalMap out(depth.width(), depth.height(), Eigen::Vector3f::Zero());
    parallel_for_rows(0, depth.height(), [&](int y0, int y1) {
        for (int y = y0; y < y1; ++y) {
            for (int x = 0; x < depth.width(); ++x) {
                const int xs = x + step;
                const int ys = y + step;
                if (!depth.in_bounds(xs, ys)) continue;
                const float d0 = depth.at(x, y);
                const float du = depth.at(xs, y);
                const float dv = depth.at(x, ys);
                if (d0 <= 0.0f || du <= 0.0f || dv <= 0.0f) continue;
                const Eigen::Vector3d p0 = backproject(intr, {double(x), double(y)}, d0);
                const Eigen::Vector3d pu = backproject(intr, {double(xs), double(y)}, du);
                const Eigen::Vector3d pv = backproject(intr, {double(x), double(ys)}, dv);
                Eigen::Vector3d n = (pu - p0).cross(pv - p0);
                const double len = n.norm();
                if (len < 1e-12) continue;
                n /= len;
                if (n.dot(p0) > 0.0) n = -n;  // orient toward the camera
                out.at(x, y) = n.cast<float>();
            }
        }
    });
    return out;
}

IntensityImage intensity_from_rgb(const ColorImage& color) {
    IntensityImage out(color.width(), color.height());
    for (int y = 0; y < color.height(); ++y) {
        for (int x = 0; x < color.width(); ++x) {
            const Rgb8 c = color.at(x, y);
            out.at(x, y) = float((0.299 * c.r + 0.587 * c.g + 0.114 * c.b) / 255.0);
        }
    }
    return out;
}

Image<Eigen::Vector2f> image_gradient(const IntensityImage& img) {
    if (img.width() < 3 || img.height() < 3) {
        throw Error("image_gradient: image smaller than 3x3");
    }
    Image<Eigen::Vector2f> out(img.width(), img.height(), Eigen::Vector2f::Zero());
    const int w = img.width();
    const int h = img.height();
    parallel_for_rows(0, h, [&](int y0, int y1) {
        for (int y = y0; y < y1; ++y) {
            for (int x = 0; x < w; ++x) {
                float gx, gy;
                if (x == 0) {
                    gx = img.at(1, y) - img.at(0, y);
                } else if (x == w - 1) {
                    gx = img.at(w - 1, y) - img.at(w - 2, y);
                } else {
                    gx = 0.5f * (img.at(x + 1, y) - img.at(x - 1, y));
                }
                if (y == 0) {
                    gy = img.at(x, 1) - img.at(x, 0);
                } else if (y == h - 1) {
                    gy = img.at(x, h - 1) - img.at(x, h - 2);
                } else {
                    gy = 0.5f * (img.at(x, y + 1) - img.at(x, y - 1));
                }
                out.at(x, y) = {gx, gy};
            }
        }
    });
    return out;
}

}  // namespace fuseforge
