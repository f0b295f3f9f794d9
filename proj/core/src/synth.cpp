#include "fwseg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "fwseg/preprocess.hpp"
#include "fwseg/random.hpp"

namespace fwseg {

namespace {

constexpr int kMaxShapeAttempts = 200;
constexpr double kPi = std::numbers::pi;

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

struct Disk {
    double cy, cx, r;
};

// Rasterizes the shape at pixel centres. Returns an empty optional-like flag
// through `ok` when the shape does not fit the canvas.
DenseMask render_shape(const std::string& family, int size, double area, Rng& rng, bool& ok) {
    const double s = size;
    DenseMask mask(size, size, 0);
    ok = false;

    if (family == "ellipses" || family == "rectangles") {
        const double aspect = uniform(rng, 0.45, 1.0);
        const double theta = uniform(rng, 0.0, kPi);
        double a = 0.0;
        double b = 0.0;
        if (family == "ellipses") {
            a = std::sqrt(area / (kPi * aspect));
        } else {
            a = std::sqrt(area / (4.0 * aspect));
        }
        b = a * aspect;
        const double reach = family == "ellipses" ? a : std::hypot(a, b);
        if (reach + 1.0 > s / 2.0) return mask;
        const double cy = uniform(rng, reach + 0.5, s - reach - 0.5);
        const double cx = uniform(rng, reach + 0.5, s - reach - 0.5);
        const double c = std::cos(theta);
        const double sn = std::sin(theta);
        for (int y = 0; y < size; ++y) {
            for (int x = 0; x < size; ++x) {
                const double dy = y + 0.5 - cy;
                const double dx = x + 0.5 - cx;
                const double u = c * dx + sn * dy;
                const double v = -sn * dx + c * dy;
                const bool inside = family == "ellipses" ? (u * u) / (a * a) + (v * v) / (b * b) <= 1.0
                                                         : std::abs(u) <= a && std::abs(v) <= b;
                mask(y, x) = inside ? 1 : 0;
            }
        }
    } else if (family == "rings") {
        const double q = uniform(rng, 0.45, 0.7);
        const double outer = std::sqrt(area / (kPi * (1.0 - q * q)));
        const double inner = outer * q;
        if (outer + 1.0 > s / 2.0) return mask;
        const double cy = uniform(rng, outer + 0.5, s - outer - 0.5);
        const double cx = uniform(rng, outer + 0.5, s - outer - 0.5);
        for (int y = 0; y < size; ++y) {
            for (int x = 0; x < size; ++x) {
                const double d = std::hypot(y + 0.5 - cy, x + 0.5 - cx);
                mask(y, x) = (d <= outer && d >= inner) ? 1 : 0;
            }
        }
    } else if (family == "blobs") {
        const int n = std::uniform_int_distribution<int>(3, 5)(rng);
        const double rho = std::sqrt(area / (kPi * 1.6));
        const double cy = uniform(rng, 0.3 * s, 0.7 * s);
        const double cx = uniform(rng, 0.3 * s, 0.7 * s);
        std::vector<Disk> disks;
        for (int i = 0; i < n; ++i) {
            const double ang = uniform(rng, 0.0, 2.0 * kPi);
            const double off = rho * uniform(rng, 0.0, 0.9);
            disks.push_back({cy + off * std::sin(ang), cx + off * std::cos(ang), rho * uniform(rng, 0.6, 1.0)});
        }
        for (const auto& d : disks) {
            if (d.cy - d.r < 0.0 || d.cx - d.r < 0.0 || d.cy + d.r > s || d.cx + d.r > s) return mask;
        }
        for (int y = 0; y < size; ++y) {
            for (int x = 0; x < size; ++x) {
                for (const auto& d : disks) {
                    if (std::hypot(y + 0.5 - d.cy, x + 0.5 - d.cx) <= d.r) {
                        mask(y, x) = 1;
                        break;
                    }
                }
            }
        }
    } else {
        throw ConfigError("unknown shape family '" + family + "'");
    }
    ok = true;
    return mask;
}

Image render_texture(const std::string& regime, const DenseMask& mask, double noise, std::uint64_t task_seed,
                     Rng& rng) {
    // Task-level constants keep every sample of a task visually consistent.
    Rng task_rng = make_rng(task_seed);
    const double period = uniform(task_rng, 3.0, 6.0);

    const int h = mask.height();
    const int w = mask.width();
    const double base = uniform(rng, 0.35, 0.65);
    const double gy = uniform(rng, -0.1, 0.1);
    const double gx = uniform(rng, -0.1, 0.1);
    const double delta = uniform(rng, 0.12, 0.25);
    const double theta = uniform(rng, 0.0, kPi);
    std::normal_distribution<double> gauss(0.0, 1.0);

    Image img(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double illum = gy * (y / static_cast<double>(h) - 0.5) + gx * (x / static_cast<double>(w) - 0.5);
            double v = base + illum + noise * gauss(rng);
            if (mask(y, x)) {
                if (regime == "contrast") {
                    v += delta;
                } else if (regime == "grain") {
                    v += 0.15 * gauss(rng);
                } else if (regime == "stripes") {
                    v += 0.18 * std::sin(2.0 * kPi * (x * std::cos(theta) + y * std::sin(theta)) / period);
                } else {
                    throw ConfigError("unknown texture regime '" + regime + "'");
                }
            }
            img(y, x) = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
    }
    return quantize_8bit(img);
}

}  // namespace

const std::vector<std::string>& synth_families() {
    static const std::vector<std::string> names{"ellipses", "rectangles", "rings", "blobs"};
    return names;
}

const std::vector<std::string>& synth_regimes() {
    static const std::vector<std::string> names{"contrast", "grain", "stripes"};
    return names;
}

void validate(const SynthSpec& spec) {
    if (spec.families.size() < 2) throw ConfigError("synthetic spec needs at least two shape families");
    auto known = [](const std::vector<std::string>& list, const std::string& name) {
        return std::find(list.begin(), list.end(), name) != list.end();
    };
    for (const auto& f : spec.families) {
        if (!known(synth_families(), f)) throw ConfigError("unknown shape family '" + f + "'");
    }
    if (spec.regimes.empty()) throw ConfigError("synthetic spec needs at least one texture regime");
    for (const auto& r : spec.regimes) {
        if (!known(synth_regimes(), r)) throw ConfigError("unknown texture regime '" + r + "'");
    }
    if (!spec.holdout.empty() && !known(spec.families, spec.holdout)) {
        throw ConfigError("holdout family '" + spec.holdout + "' is not among the families");
    }
    if (spec.image_size < 16) throw ConfigError("synthetic image_size must be >= 16");
    if (spec.samples_per_task < 2) throw ConfigError("samples_per_task must be >= 2");
    if (!(spec.min_area > 0.0 && spec.min_area <= spec.max_area && spec.max_area < 0.6)) {
        throw ConfigError("area range must satisfy 0 < min_area <= max_area < 0.6");
    }
    if (spec.noise < 0.0) throw ConfigError("noise must be non-negative");
}

Sample synth_sample(const std::string& family, const std::string& regime, int size, double min_area,
                    double max_area, double noise, std::uint64_t seed) {
    Rng rng = make_rng(seed);
    const double pixels = static_cast<double>(size) * size;
    for (int attempt = 0; attempt < kMaxShapeAttempts; ++attempt) {
        const double target = uniform(rng, min_area, max_area) * pixels;
        bool ok = false;
        DenseMask mask = render_shape(family, size, target, rng, ok);
        if (!ok) continue;
        const double frac = static_cast<double>(count_ones(mask)) / pixels;
        if (frac < min_area || frac > max_area) continue;
        const std::uint64_t task_seed = derive_seed(hash_name(family), regime);
        Image img = render_texture(regime, mask, noise, task_seed, rng);
        return {std::move(img), std::move(mask)};
    }
    throw DataError("could not render a '" + family + "' shape within the requested area range");
}

MetaDataset synth_meta_dataset(const SynthSpec& spec) {
    validate(spec);
    MetaDataset meta;
    for (const auto& family : spec.families) {
        for (const auto& regime : spec.regimes) {
            SegTask task{family, regime, {}};
            const std::uint64_t task_seed = derive_seed(derive_seed(spec.seed, family), regime);
            for (int i = 0; i < spec.samples_per_task; ++i) {
                task.samples.push_back(synth_sample(family, regime, spec.image_size, spec.min_area, spec.max_area,
                                                    spec.noise, derive_seed(task_seed, static_cast<std::uint64_t>(i))));
            }
            meta.tasks.push_back(std::move(task));
        }
    }
    if (!spec.holdout.empty()) meta.holdout.insert(spec.holdout);
    return meta;
}

}  // namespace fwseg
