#include "support.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

namespace testing {

TempDir::TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    rainlab::Rng rng(static_cast<std::uint64_t>(std::chrono::steady_clock::now().time_since_epoch().count()) ^
                     (++counter << 32));
    for (;;) {
        path_ = fs::temp_directory_path() / (tag + "-" + std::to_string(rng.next_u64() % 1000000000ULL));
        if (fs::create_directories(path_)) break;
    }
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

std::uint64_t file_hash(const fs::path& file) {
    const std::string bytes = read_file(file);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::map<std::string, std::uint64_t> tree_hashes(const fs::path& root) {
    std::map<std::string, std::uint64_t> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = file_hash(e.path());
    }
    return out;
}

std::string read_file(const fs::path& file) {
    std::ifstream is(file, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

rainlab::Image random_image(rainlab::Rng& rng, int h, int w, int c) {
    rainlab::Image img(h, w, c);
    for (double& v : img.data) v = rng.uniform();
    return img;
}

double fitted_streak_angle(const rainlab::rain::StreakParams& streak) {
    const int side = static_cast<int>(std::ceil(streak.length + streak.width)) + 8;
    rainlab::RainField canvas(side, side);
    rainlab::rain::StreakParams s = streak;
    // keep the subpixel phase of the original center
    s.cx = side / 2 + (streak.cx - std::floor(streak.cx));
    s.cy = side / 2 + (streak.cy - std::floor(streak.cy));
    rainlab::rain::draw_streak(canvas, s);

    double w = 0, mx = 0, my = 0;
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) {
            const double v = canvas.at(y, x);
            w += v;
            mx += v * x;
            my += v * y;
        }
    mx /= w;
    my /= w;
    double sxx = 0, syy = 0, sxy = 0;
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) {
            const double v = canvas.at(y, x);
            sxx += v * (x - mx) * (x - mx);
            syy += v * (y - my) * (y - my);
            sxy += v * (x - mx) * (y - my);
        }
    // major axis angle from +x, then convert to tilt from vertical
    const double phi = 0.5 * std::atan2(2.0 * sxy, sxx - syy) * 180.0 / std::numbers::pi;
    double tilt = phi - 90.0;
    while (tilt <= -90.0) tilt += 180.0;
    while (tilt > 90.0) tilt -= 180.0;
    return tilt;
}

rainlab::ad::Tensor random_tensor(rainlab::Rng& rng, rainlab::ad::Shape shape, double lo, double hi) {
    rainlab::ad::Tensor t(std::move(shape));
    for (double& v : t.storage()) v = rng.uniform(lo, hi);
    return t;
}

double max_gradient_error(std::vector<rainlab::ad::Var> inputs,
                          const std::function<rainlab::ad::Var(const std::vector<rainlab::ad::Var>&)>& f,
                          rainlab::Rng& rng, double h) {
    using namespace rainlab::ad;
    const Var probe_out = [&] {
        NoGradGuard g;
        return f(inputs);
    }();
    const Var weights = constant(random_tensor(rng, probe_out.shape()));
    auto objective = [&](const std::vector<Var>& in) {
        const Var out = f(in);
        double s = 0;
        for (std::size_t i = 0; i < out.value().size(); ++i) s += out.value()[i] * weights.value()[i];
        return s;
    };
    // sum(w * o) = (|o + w|^2 - |o|^2 - |w|^2) / 2, and the last term is constant
    for (auto& v : inputs) v.zero_grad();
    const Var out = f(inputs);
    const std::size_t n = out.value().size();
    const Var sq_plus = scale(mse_loss(add(out, weights), constant(Tensor(out.shape()))), 0.5 * n);
    const Var sq_o = scale(mse_loss(out, constant(Tensor(out.shape()))), -0.5 * n);
    backward(add(sq_plus, sq_o));
    double worst = 0.0;
    for (auto& in : inputs) {
        if (!in.requires_grad()) continue;
        const Tensor analytic = in.grad();
        if (analytic.size() != in.value().size()) return std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < analytic.size(); ++i) {
            NoGradGuard g;
            double& x = in.mutable_value()[i];
            const double x0 = x;
            x = x0 + h;
            const double fp = objective(inputs);
            x = x0 - h;
            const double fm = objective(inputs);
            x = x0;
            const double numeric = (fp - fm) / (2 * h);
            worst = std::max(worst, std::abs(numeric - analytic[i]) / std::max(1.0, std::abs(numeric)));
        }
    }
    return worst;
}

double rms_oracle(const rainlab::Image& a, const rainlab::Image& b, const rainlab::BinaryMask& m, int want) {
    std::vector<double> errs;
    for (int y = 0; y < a.height; ++y)
        for (int x = 0; x < a.width; ++x) {
            if (m.at(y, x) != want) continue;
            double e = 0;
            for (int c = 0; c < a.channels; ++c) e += std::pow(a.at(y, x, c) - b.at(y, x, c), 2);
            errs.push_back(e / a.channels);
        }
    long double s = 0;
    for (double e : errs) s += e;
    return 255.0 * std::sqrt(static_cast<double>(s / errs.size()));
}

double psnr_oracle(const rainlab::Image& a, const rainlab::Image& b) {
    long double s = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) s += std::pow(a.data[i] - b.data[i], 2);
    const double mse = static_cast<double>(s / a.data.size());
    return mse == 0 ? 99.0 : std::min(99.0, -10.0 * std::log10(mse));
}

}  // namespace testing
