#include "sdp/metrics.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <vector>

namespace sdp {

double psnr(const SpectralCube& a, const SpectralCube& b, double peak) {
    if (!same_dims(a, b)) throw ShapeError("psnr: dims differ");
    double acc = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        const double d = static_cast<double>(a.data[i]) - b.data[i];
        acc += d * d;
    }
    const double mse = acc / static_cast<double>(a.data.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

namespace {

constexpr int kWin = 11;

std::array<double, kWin> gaussian_kernel1d(double sigma) {
    std::array<double, kWin> k{};
    const int half = kWin / 2;
    double sum = 0.0;
    for (int i = 0; i < kWin; ++i) {
        const double d = i - half;
        k[static_cast<size_t>(i)] = std::exp(-(d * d) / (2.0 * sigma * sigma));
        sum += k[static_cast<size_t>(i)];
    }
    for (auto& v : k) v /= sum;
    return k;
}

// separable valid-mode Gaussian filtering: rows then columns
std::vector<double> filter_valid(const std::vector<double>& img, int h, int w,
                                 const std::array<double, kWin>& k) {
    const int wv = w - kWin + 1;
    const int hv = h - kWin + 1;
    std::vector<double> rows(static_cast<size_t>(h) * wv);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < wv; ++x) {
            double acc = 0.0;
            for (int i = 0; i < kWin; ++i) acc += k[static_cast<size_t>(i)] * img[static_cast<size_t>(y) * w + x + i];
            rows[static_cast<size_t>(y) * wv + x] = acc;
        }
    std::vector<double> out(static_cast<size_t>(hv) * wv);
    for (int y = 0; y < hv; ++y)
        for (int x = 0; x < wv; ++x) {
            double acc = 0.0;
            for (int i = 0; i < kWin; ++i) acc += k[static_cast<size_t>(i)] * rows[static_cast<size_t>(y + i) * wv + x];
            out[static_cast<size_t>(y) * wv + x] = acc;
        }
    return out;
}

} // namespace

double ssim(const SpectralCube& a, const SpectralCube& b, double peak) {
    if (!same_dims(a, b)) throw ShapeError("ssim: dims differ");
    if (a.height < kWin || a.width < kWin)
        throw ShapeError("ssim: image smaller than the 11x11 window");

    const auto kernel = gaussian_kernel1d(1.5);
    const double c1 = (0.01 * peak) * (0.01 * peak);
    const double c2 = (0.03 * peak) * (0.03 * peak);
    const int h = a.height, w = a.width;
    const size_t plane = static_cast<size_t>(h) * w;

    double total = 0.0;
    int64_t count = 0;
    std::vector<double> x(plane), y(plane), xx(plane), yy(plane), xy(plane);
    for (int n = 0; n < a.bands; ++n) {
        const float* pa = a.band_ptr(n);
        const float* pb = b.band_ptr(n);
        for (size_t i = 0; i < plane; ++i) {
            x[i] = pa[i];
            y[i] = pb[i];
            xx[i] = x[i] * x[i];
            yy[i] = y[i] * y[i];
            xy[i] = x[i] * y[i];
        }
        const auto mx = filter_valid(x, h, w, kernel);
        const auto my = filter_valid(y, h, w, kernel);
        const auto mxx = filter_valid(xx, h, w, kernel);
        const auto myy = filter_valid(yy, h, w, kernel);
        const auto mxy = filter_valid(xy, h, w, kernel);
        for (size_t i = 0; i < mx.size(); ++i) {
            const double vx = mxx[i] - mx[i] * mx[i];
            const double vy = myy[i] - my[i] * my[i];
            const double cxy = mxy[i] - mx[i] * my[i];
            const double num = (2.0 * mx[i] * my[i] + c1) * (2.0 * cxy + c2);
            const double den = (mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2);
            total += num / den;
        }
        count += static_cast<int64_t>(mx.size());
    }
    return total / static_cast<double>(count);
}

} // namespace sdp
