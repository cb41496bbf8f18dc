#include "treering/edge_detect.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstddef>
#include <numeric>

#include "treering/errors.hpp"

namespace treering {

namespace {

// Numerically tolerant a > b, so neighbor magnitudes that differ only by
// floating point noise count as equal (keeps the tie-break convention of
// picking the left/lower pixel stable).
bool definitely_greater(double a, double b) {
    if (a <= b) return false;
    return (a - b) >= 1000.0 * DBL_EPSILON;
}

int kernel_halfwidth(double sigma) {
    // First discarded coefficient at least 10^3 times smaller than the peak.
    const double prec = 3.0;
    return static_cast<int>(std::ceil(sigma * std::sqrt(2.0 * prec * std::log(10.0))));
}

int reflect_index(int j, int n) {
    // Symmetric reflection with the border sample repeated: -1 -> 0, n -> n-1.
    while (j < 0 || j >= n) {
        if (j < 0) j = -1 - j;
        if (j >= n) j = 2 * n - 1 - j;
    }
    return j;
}

struct Kernels {
    std::vector<double> smooth;  // sums to 1
    std::vector<double> deriv;   // unit response on a unit ramp
    int offset = 0;
};

Kernels gradient_kernels(double sigma) {
    Kernels k;
    k.offset = kernel_halfwidth(sigma);
    const int n = 2 * k.offset + 1;
    k.smooth.resize(n);
    k.deriv.resize(n);
    double smooth_sum = 0.0;
    double ramp_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double t = static_cast<double>(i - k.offset);
        const double g = std::exp(-0.5 * (t / sigma) * (t / sigma));
        k.smooth[i] = g;
        k.deriv[i] = t * g;  // correlation kernel of the Gaussian derivative
        smooth_sum += g;
        ramp_sum += k.deriv[i] * t;
    }
    for (int i = 0; i < n; ++i) {
        k.smooth[i] /= smooth_sum;
        k.deriv[i] /= ramp_sum;
    }
    return k;
}

// Correlate every row (horizontal=true) or column with `kernel`.
std::vector<double> correlate_1d(const std::vector<double>& data, int width, int height,
                                 const std::vector<double>& kernel, int offset, bool horizontal) {
    std::vector<double> out(data.size());
    const int n = static_cast<int>(kernel.size());
    if (horizontal) {
        for (int y = 0; y < height; ++y) {
            const double* row = data.data() + static_cast<std::size_t>(y) * width;
            for (int x = 0; x < width; ++x) {
                double val = 0.0;
                for (int i = 0; i < n; ++i) {
                    val += kernel[i] * row[reflect_index(x + i - offset, width)];
                }
                out[static_cast<std::size_t>(y) * width + x] = val;
            }
        }
    } else {
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                double val = 0.0;
                for (int i = 0; i < n; ++i) {
                    const int j = reflect_index(y + i - offset, height);
                    val += kernel[i] * data[static_cast<std::size_t>(j) * width + x];
                }
                out[static_cast<std::size_t>(y) * width + x] = val;
            }
        }
    }
    return out;
}

constexpr double kNotAnEdge = -1.0;

// Non-maximum suppression with Devernay's parabola correction. ex/ey get
// the sub-pixel coordinates, or -1 where the pixel is not an edge point.
void compute_edge_points(std::vector<double>& ex, std::vector<double>& ey,
                         const GradientField& g) {
    const int w = g.width;
    const int h = g.height;
    ex.assign(g.mag.size(), kNotAnEdge);
    ey.assign(g.mag.size(), kNotAnEdge);
    // 2 px margin keeps the chaining neighborhood in bounds and avoids the
    // mirror maxima that reflection padding creates right at the border.
    for (int y = 2; y < h - 2; ++y) {
        for (int x = 2; x < w - 2; ++x) {
            const std::size_t idx = g.index(x, y);
            const double mod = g.mag[idx];
            const double left = g.mag[g.index(x - 1, y)];
            const double right = g.mag[g.index(x + 1, y)];
            const double up = g.mag[g.index(x, y + 1)];
            const double down = g.mag[g.index(x, y - 1)];
            const double ax = std::abs(g.gx[idx]);
            const double ay = std::abs(g.gy[idx]);
            int dx = 0;
            int dy = 0;
            // Horizontal maximum with a mostly horizontal gradient, or
            // vertical maximum with a mostly vertical one. Ties between two
            // equal neighbors mark the left/lower pixel.
            if (definitely_greater(mod, left) && !definitely_greater(right, mod) && ax >= ay) {
                dx = 1;
            } else if (definitely_greater(mod, down) && !definitely_greater(up, mod) && ax <= ay) {
                dy = 1;
            }
            if (dx == 0 && dy == 0) continue;
            const double a = g.mag[g.index(x - dx, y - dy)];
            const double b = mod;
            const double c = g.mag[g.index(x + dx, y + dy)];
            const double denom = a - b - b + c;
            const double offset = (denom != 0.0) ? 0.5 * (a - c) / denom : 0.0;
            ex[idx] = x + offset * dx;
            ey[idx] = y + offset * dy;
        }
    }
}

// Score for chaining edge point `from` to `to`: 0 if invalid, positive for a
// forward link, negative for a backward link; larger magnitude = closer.
double chain_score(std::size_t from, std::size_t to, const std::vector<double>& ex,
                   const std::vector<double>& ey, const GradientField& g) {
    if (from == to) return 0.0;
    if (ex[from] < 0.0 || ex[to] < 0.0) return 0.0;
    const double dx = ex[to] - ex[from];
    const double dy = ey[to] - ey[from];
    // The gradient must be roughly orthogonal to the joining segment, with
    // the same sidedness at both points (edges keep dark on one side).
    const double side_from = g.gy[from] * dx - g.gx[from] * dy;
    const double side_to = g.gy[to] * dx - g.gx[to] * dy;
    if (side_from * side_to <= 0.0) return 0.0;
    const double d = std::hypot(dx, dy);
    if (d == 0.0) return 0.0;
    return (side_from >= 0.0) ? 1.0 / d : -1.0 / d;
}

void chain_edge_points(std::vector<int>& next, std::vector<int>& prev,
                       const std::vector<double>& ex, const std::vector<double>& ey,
                       const GradientField& g) {
    const int w = g.width;
    const int h = g.height;
    next.assign(ex.size(), -1);
    prev.assign(ex.size(), -1);
    for (int y = 2; y < h - 2; ++y) {
        for (int x = 2; x < w - 2; ++x) {
            const std::size_t from = g.index(x, y);
            if (ex[from] < 0.0) continue;
            double fwd_score = 0.0;
            double bck_score = 0.0;
            int fwd = -1;
            int bck = -1;
            // Candidates at most two pixels away in each axis.
            for (int j = -2; j <= 2; ++j) {
                for (int i = -2; i <= 2; ++i) {
                    const std::size_t to = g.index(x + i, y + j);
                    const double s = chain_score(from, to, ex, ey, g);
                    if (s > fwd_score) {
                        fwd_score = s;
                        fwd = static_cast<int>(to);
                    }
                    if (s < bck_score) {
                        bck_score = s;
                        bck = static_cast<int>(to);
                    }
                }
            }
            // Link only if no existing alternative link into the target is
            // better; stealing a link resets the loser's back-pointer.
            if (fwd >= 0 && next[from] != fwd) {
                const int alt = prev[fwd];
                if (alt < 0 || chain_score(alt, fwd, ex, ey, g) < fwd_score) {
                    if (next[from] >= 0) prev[next[from]] = -1;
                    next[from] = fwd;
                    if (alt >= 0) next[alt] = -1;
                    prev[fwd] = static_cast<int>(from);
                }
            }
            if (bck >= 0 && prev[from] != bck) {
                const int alt = next[bck];
                if (alt < 0 || chain_score(alt, bck, ex, ey, g) > bck_score) {
                    if (alt >= 0) prev[alt] = -1;
                    next[bck] = static_cast<int>(from);
                    if (prev[from] >= 0) next[prev[from]] = -1;
                    prev[from] = bck;
                }
            }
        }
    }
}

void thresholds_with_hysteresis(std::vector<int>& next, std::vector<int>& prev,
                                const GradientField& g, double high_th, double low_th) {
    std::vector<char> valid(next.size(), 0);
    const auto is_edge = [&](std::size_t i) { return prev[i] >= 0 || next[i] >= 0; };
    for (std::size_t i = 0; i < next.size(); ++i) {
        if (!is_edge(i) || valid[i] || g.mag[i] < high_th) continue;
        valid[i] = 1;
        // Walk forward, validating points above the low threshold and
        // cutting the chain at the first one below it.
        for (int j = static_cast<int>(i); j >= 0;) {
            const int k = next[j];
            if (k < 0 || valid[k]) break;
            if (g.mag[k] < low_th) {
                next[j] = -1;
                prev[k] = -1;
                break;
            }
            valid[k] = 1;
            j = k;
        }
        // Same walk backwards.
        for (int j = static_cast<int>(i); j >= 0;) {
            const int k = prev[j];
            if (k < 0 || valid[k]) break;
            if (g.mag[k] < low_th) {
                prev[j] = -1;
                next[k] = -1;
                break;
            }
            valid[k] = 1;
            j = k;
        }
    }
    for (std::size_t i = 0; i < next.size(); ++i) {
        if (is_edge(i) && !valid[i]) {
            prev[i] = -1;
            next[i] = -1;
        }
    }
}

EdgePoint make_point(std::size_t i, const std::vector<double>& ex, const std::vector<double>& ey,
                     const GradientField& g) {
    return EdgePoint{ex[i], ey[i], Point2{g.gx[i], g.gy[i]}};
}

constexpr double kLinkLimit = 2.0 + 1e-9;

double link_length(const EdgePoint& a, const EdgePoint& b) {
    return std::hypot(b.x - a.x, b.y - a.y);
}

// Split a traversed curve wherever consecutive points are more than 2 px
// apart so the emitted chains honor the spacing invariant. Closed curves
// that survive intact keep the repeated first point.
void emit_curve(std::vector<EdgePoint> pts, bool closed, std::vector<EdgeChain>& out) {
    if (closed) {
        pts.pop_back();  // drop the duplicate of the first point
        const std::size_t n = pts.size();
        std::size_t first_break = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (link_length(pts[i], pts[(i + 1) % n]) > kLinkLimit) {
                first_break = i;
                break;
            }
        }
        if (first_break == n) {
            if (n >= 2) {
                pts.push_back(pts.front());
                out.push_back(EdgeChain{std::move(pts)});
            }
            return;
        }
        // Rotate so a broken link sits at the seam, then treat as open.
        std::rotate(pts.begin(), pts.begin() + (first_break + 1) % n, pts.end());
    }
    std::vector<EdgePoint> run;
    for (const EdgePoint& p : pts) {
        if (!run.empty() && link_length(run.back(), p) > kLinkLimit) {
            if (run.size() >= 2) out.push_back(EdgeChain{run});
            run.clear();
        }
        run.push_back(p);
    }
    if (run.size() >= 2) out.push_back(EdgeChain{std::move(run)});
}

std::vector<EdgeChain> list_chains(std::vector<int>& next, std::vector<int>& prev,
                                   const std::vector<double>& ex, const std::vector<double>& ey,
                                   const GradientField& g) {
    std::vector<EdgeChain> chains;
    for (std::size_t i = 0; i < next.size(); ++i) {
        if (prev[i] < 0 && next[i] < 0) continue;
        // Rewind to the chain start; a closed curve comes back to i.
        std::size_t start = i;
        for (int p = prev[start]; p >= 0 && static_cast<std::size_t>(p) != i;
             p = prev[start]) {
            start = static_cast<std::size_t>(p);
        }
        std::vector<EdgePoint> pts;
        int k = static_cast<int>(start);
        while (k >= 0) {
            pts.push_back(make_point(static_cast<std::size_t>(k), ex, ey, g));
            const int n = next[k];
            next[k] = -1;  // unlink so the point is consumed exactly once;
            prev[k] = -1;  // a closed curve revisits its start once more
            k = n;
        }
        const bool closed = pts.size() >= 3 && pts.front().x == pts.back().x &&
                            pts.front().y == pts.back().y;
        emit_curve(std::move(pts), closed, chains);
    }
    std::sort(chains.begin(), chains.end(), [](const EdgeChain& a, const EdgeChain& b) {
        const EdgePoint& pa = a.points.front();
        const EdgePoint& pb = b.points.front();
        if (pa.y != pb.y) return pa.y < pb.y;
        if (pa.x != pb.x) return pa.x < pb.x;
        return a.points.size() < b.points.size();
    });
    return chains;
}

}  // namespace

GradientField gaussian_gradient(const GrayImage& image, double sigma) {
    if (sigma <= 0.0) {
        throw Error("gaussian_gradient: sigma must be positive");
    }
    const Kernels k = gradient_kernels(sigma);
    const int n = 2 * k.offset + 1;
    if (image.width < n || image.height < n) {
        throw ImageTooSmall("image " + std::to_string(image.width) + "x" +
                            std::to_string(image.height) + " is smaller than the " +
                            std::to_string(n) + "-tap kernel for sigma " + std::to_string(sigma));
    }
    std::vector<double> data(image.pixels.begin(), image.pixels.end());
    GradientField g;
    g.width = image.width;
    g.height = image.height;
    const std::vector<double> smooth_y = correlate_1d(data, g.width, g.height, k.smooth, k.offset, false);
    g.gx = correlate_1d(smooth_y, g.width, g.height, k.deriv, k.offset, true);
    const std::vector<double> smooth_x = correlate_1d(data, g.width, g.height, k.smooth, k.offset, true);
    g.gy = correlate_1d(smooth_x, g.width, g.height, k.deriv, k.offset, false);
    g.mag.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        g.mag[i] = std::hypot(g.gx[i], g.gy[i]);
    }
    return g;
}

double magnitude_percentile(const GradientField& grad, double pct) {
    if (pct < 0.0 || pct > 100.0) {
        throw Error("magnitude_percentile: percentile must be in [0, 100]");
    }
    std::vector<double> values;
    values.reserve(grad.mag.size());
    for (double m : grad.mag) {
        if (m > 0.0) values.push_back(m);
    }
    if (values.empty()) return 0.0;
    // Nearest rank: smallest value with at least pct percent of the data at
    // or below it.
    const auto rank = static_cast<std::size_t>(
        std::max(1.0, std::ceil(pct / 100.0 * static_cast<double>(values.size()))));
    const std::size_t index = std::min(rank, values.size()) - 1;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(index),
                     values.end());
    return values[index];
}

std::vector<EdgeChain> detect_edges(const GradientField& grad, double low_th, double high_th) {
    if (low_th < 0.0 || low_th > high_th) {
        throw Error("detect_edges: thresholds must satisfy 0 <= low <= high");
    }
    if (grad.width < 5 || grad.height < 5) {
        throw ImageTooSmall("gradient field " + std::to_string(grad.width) + "x" +
                            std::to_string(grad.height) +
                            " leaves no interior for non-maximum suppression");
    }
    std::vector<double> ex;
    std::vector<double> ey;
    compute_edge_points(ex, ey, grad);
    std::vector<int> next;
    std::vector<int> prev;
    chain_edge_points(next, prev, ex, ey, grad);
    thresholds_with_hysteresis(next, prev, grad, high_th, low_th);
    return list_chains(next, prev, ex, ey, grad);
}

std::vector<EdgeChain> detect_edges(const GrayImage& image, double sigma, double low_th,
                                    double high_th) {
    return detect_edges(gaussian_gradient(image, sigma), low_th, high_th);
}

}  // namespace treering
