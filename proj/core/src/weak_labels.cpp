#include "fwseg/weak_labels.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <random>

#include "fwseg/morphology.hpp"
#include "fwseg/random.hpp"

namespace fwseg {

namespace {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::uint8_t dense_at(const DenseMask& dense, std::size_t i) { return dense[i] ? 1 : 0; }

// Dilates each class independently and keeps, per class, only pixels whose
// dense label matches. Two disks of different classes can overlap; the overlap
// keeps the label that agrees with the dense mask.
WeakMask compose_labels(const DenseMask& dense, const BinaryGrid& neg_seeds, const BinaryGrid& pos_seeds, int radius) {
    const BinaryGrid neg = radius > 0 ? dilate(neg_seeds, radius) : neg_seeds;
    const BinaryGrid pos = radius > 0 ? dilate(pos_seeds, radius) : pos_seeds;
    WeakMask weak(dense.height(), dense.width(), Label::Unknown);
    for (std::size_t i = 0; i < weak.size(); ++i) {
        const auto d = dense_at(dense, i);
        if (d == 0 && neg[i]) {
            weak[i] = Label::Negative;
        } else if (d == 1 && pos[i]) {
            weak[i] = Label::Positive;
        } else if (neg[i] || pos[i]) {
            // Disagreeing coverage: give it the raw label and let fix_integrity clear it.
            weak[i] = neg[i] ? Label::Negative : Label::Positive;
        }
    }
    return fix_integrity(dense, weak);
}

void require_both_classes(const WeakMask& weak, std::string_view style) {
    if (count_label(weak, Label::Negative) == 0 || count_label(weak, Label::Positive) == 0) {
        throw InfeasibleSparsity(std::string(style) + ": sparsified mask lacks a labeled pixel of some class");
    }
}

void require_style(const SparsityParams& p, AnnotationStyle want) {
    if (p.style != want) {
        throw ParameterError("sparsity params are for style '" + std::string(to_string(p.style)) + "', expected '" +
                             std::string(to_string(want)) + "'");
    }
    validate(p);
}

}  // namespace

std::string_view to_string(AnnotationStyle style) {
    switch (style) {
        case AnnotationStyle::Points: return "points";
        case AnnotationStyle::Grid: return "grid";
        case AnnotationStyle::Scribbles: return "scribbles";
        case AnnotationStyle::Skeleton: return "skeleton";
    }
    return "unknown";
}

AnnotationStyle parse_style(std::string_view name) {
    if (name == "points") return AnnotationStyle::Points;
    if (name == "grid") return AnnotationStyle::Grid;
    if (name == "scribbles") return AnnotationStyle::Scribbles;
    if (name == "skeleton") return AnnotationStyle::Skeleton;
    throw ConfigError("unknown annotation style '" + std::string(name) + "'");
}

std::string SparsityParams::describe() const {
    switch (style) {
        case AnnotationStyle::Points:
            return "n_pix=" + std::to_string(n_pix) + ";radius=" + std::to_string(radius);
        case AnnotationStyle::Grid:
            return "spacing=" + std::to_string(spacing) + ";radius=" + std::to_string(radius);
        case AnnotationStyle::Scribbles:
            return "proportion=" + format_double(proportion) + ";radius=" + std::to_string(radius);
        case AnnotationStyle::Skeleton:
            return "radius=" + std::to_string(radius);
    }
    return {};
}

SparsityParams SparsityParams::parse(AnnotationStyle style, std::string_view text) {
    SparsityParams p;
    p.style = style;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find_first_of(",;", pos);
        if (end == std::string_view::npos) end = text.size();
        const auto item = text.substr(pos, end - pos);
        pos = end + 1;
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string_view::npos) throw ConfigError("sparsity param '" + std::string(item) + "' lacks '='");
        const auto key = item.substr(0, eq);
        const std::string value(item.substr(eq + 1));
        try {
            if (key == "n_pix") {
                p.n_pix = std::stoi(value);
            } else if (key == "radius") {
                p.radius = std::stoi(value);
            } else if (key == "spacing") {
                p.spacing = std::stoi(value);
            } else if (key == "proportion" || key == "prop") {
                p.proportion = std::stod(value);
            } else if (key == "seed") {
                p.seed = std::stoull(value);
            } else {
                throw ConfigError("unknown sparsity param '" + std::string(key) + "'");
            }
        } catch (const std::logic_error&) {
            throw ConfigError("bad value for sparsity param '" + std::string(key) + "': " + value);
        }
    }
    validate(p);
    return p;
}

void validate(const SparsityParams& p) {
    if (p.radius < 0) throw ParameterError("radius must be >= 0");
    switch (p.style) {
        case AnnotationStyle::Points:
            if (p.n_pix < 1) throw ParameterError("points: n_pix must be >= 1");
            break;
        case AnnotationStyle::Grid:
            if (p.spacing < 1) throw ParameterError("grid: spacing must be >= 1");
            break;
        case AnnotationStyle::Scribbles:
            if (!(p.proportion > 0.0 && p.proportion <= 1.0)) {
                throw ParameterError("scribbles: proportion must be in (0, 1]");
            }
            break;
        case AnnotationStyle::Skeleton: break;
    }
}

WeakMask fix_integrity(const DenseMask& dense, const WeakMask& weak) {
    require_same_shape(dense, weak, "fix_integrity");
    WeakMask out = weak;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto d = dense_at(dense, i);
        if ((d == 0 && out[i] == Label::Positive) || (d == 1 && out[i] == Label::Negative)) out[i] = Label::Unknown;
    }
    return out;
}

WeakMask weak_points(const DenseMask& dense, const SparsityParams& params) {
    require_style(params, AnnotationStyle::Points);
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < dense.size(); ++i) by_class[dense_at(dense, i)].push_back(i);
    const auto n = static_cast<std::size_t>(params.n_pix);
    if (by_class[0].size() < n || by_class[1].size() < n) {
        throw InfeasibleSparsity("points: need " + std::to_string(n) + " pixels per class, have " +
                                 std::to_string(by_class[0].size()) + " negative / " +
                                 std::to_string(by_class[1].size()) + " positive");
    }
    BinaryGrid seeds[2] = {BinaryGrid(dense.height(), dense.width(), 0), BinaryGrid(dense.height(), dense.width(), 0)};
    for (int c = 0; c < 2; ++c) {
        // A full seeded permutation; taking a prefix makes point sets nested in n_pix.
        Rng rng = make_rng(derive_seed(params.seed, static_cast<std::uint64_t>(c)));
        auto& idx = by_class[c];
        std::shuffle(idx.begin(), idx.end(), rng);
        for (std::size_t k = 0; k < n; ++k) seeds[c][idx[k]] = 1;
    }
    auto weak = compose_labels(dense, seeds[0], seeds[1], params.radius);
    require_both_classes(weak, "points");
    return weak;
}

WeakMask grid_anchors(const DenseMask& dense, int spacing) {
    if (spacing < 1) throw ParameterError("grid: spacing must be >= 1");
    WeakMask weak(dense.height(), dense.width(), Label::Unknown);
    for (int y = 0; y < dense.height(); y += spacing) {
        for (int x = 0; x < dense.width(); x += spacing) {
            weak(y, x) = dense(y, x) ? Label::Positive : Label::Negative;
        }
    }
    return weak;
}

WeakMask weak_grid(const DenseMask& dense, const SparsityParams& params) {
    require_style(params, AnnotationStyle::Grid);
    const auto anchors = grid_anchors(dense, params.spacing);
    BinaryGrid neg(dense.height(), dense.width(), 0);
    BinaryGrid pos(dense.height(), dense.width(), 0);
    for (std::size_t i = 0; i < anchors.size(); ++i) {
        if (anchors[i] == Label::Negative) neg[i] = 1;
        if (anchors[i] == Label::Positive) pos[i] = 1;
    }
    auto weak = compose_labels(dense, neg, pos, params.radius);
    require_both_classes(weak, "grid");
    return weak;
}

WeakMask weak_scribbles(const DenseMask& dense, const SparsityParams& params) {
    require_style(params, AnnotationStyle::Scribbles);
    const BinaryGrid inner = erode(dense, kShapeOffsetRadius);
    if (count_ones(inner) == 0) throw InfeasibleSparsity("scribbles: erosion empties the positive region");
    const BinaryGrid outer = dilate(dense, kShapeOffsetRadius);
    const auto neg = sample_contour_fraction(contour_pixels(outer), params.proportion, derive_seed(params.seed, 0));
    const auto pos = sample_contour_fraction(contour_pixels(inner), params.proportion, derive_seed(params.seed, 1));
    auto weak = compose_labels(dense, neg, pos, params.radius);
    require_both_classes(weak, "scribbles");
    return weak;
}

WeakMask weak_skeleton(const DenseMask& dense, const SparsityParams& params) {
    require_style(params, AnnotationStyle::Skeleton);
    if (count_ones(dense) == 0) throw InfeasibleSparsity("skeleton: empty positive region");
    const auto neg = contour_pixels(dilate(dense, kShapeOffsetRadius));
    const auto pos = skeletonize(dense);
    auto weak = compose_labels(dense, neg, pos, params.radius);
    require_both_classes(weak, "skeleton");
    return weak;
}

WeakMask sparsify(const DenseMask& dense, const SparsityParams& params) {
    switch (params.style) {
        case AnnotationStyle::Points: return weak_points(dense, params);
        case AnnotationStyle::Grid: return weak_grid(dense, params);
        case AnnotationStyle::Scribbles: return weak_scribbles(dense, params);
        case AnnotationStyle::Skeleton: return weak_skeleton(dense, params);
    }
    throw ParameterError("unknown annotation style");
}

std::vector<SparsityParams> test_sparsity_grid(AnnotationStyle style) {
    std::vector<SparsityParams> grid;
    auto add = [&](SparsityParams p) {
        p.style = style;
        grid.push_back(p);
    };
    switch (style) {
        case AnnotationStyle::Points:
            for (int n : {1, 5, 10})
                for (int r : {1, 2, 3}) add({.n_pix = n, .radius = r});
            break;
        case AnnotationStyle::Grid:
            for (int s : {20, 16, 12})
                for (int r : {1, 2, 3}) add({.radius = r, .spacing = s});
            break;
        case AnnotationStyle::Scribbles:
            for (double prop : {0.1, 0.25, 0.5, 1.0})
                for (int r : {1, 2, 4, 8}) add({.radius = r, .proportion = prop});
            break;
        case AnnotationStyle::Skeleton:
            for (int r : {1, 2, 4, 8}) add({.radius = r});
            break;
    }
    return grid;
}

SparsityParams sample_sparsity_params(AnnotationStyle style, Phase phase, std::uint64_t seed) {
    if (phase == Phase::Test) {
        const auto grid = test_sparsity_grid(style);
        auto p = grid[seed % grid.size()];
        p.seed = derive_seed(seed, "sparsify");
        return p;
    }
    Rng rng = make_rng(seed);
    auto uniform_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    SparsityParams p;
    p.style = style;
    switch (style) {
        case AnnotationStyle::Points:
            p.n_pix = uniform_int(1, 20);
            p.radius = uniform_int(1, 5);
            break;
        case AnnotationStyle::Grid:
            p.spacing = uniform_int(12, 20);
            p.radius = uniform_int(1, 5);
            break;
        case AnnotationStyle::Scribbles:
            p.proportion = std::uniform_real_distribution<double>(0.1, 1.0)(rng);
            p.radius = uniform_int(1, 8);
            break;
        case AnnotationStyle::Skeleton: p.radius = uniform_int(1, 8); break;
    }
    p.seed = derive_seed(seed, "sparsify");
    return p;
}

std::size_t count_label(const WeakMask& weak, Label label) {
    return static_cast<std::size_t>(std::count(weak.cells().begin(), weak.cells().end(), label));
}

std::size_t integrity_violations(const DenseMask& dense, const WeakMask& weak) {
    require_same_shape(dense, weak, "integrity_violations");
    std::size_t bad = 0;
    for (std::size_t i = 0; i < weak.size(); ++i) {
        const auto d = dense_at(dense, i);
        bad += (weak[i] == Label::Positive && d == 0) || (weak[i] == Label::Negative && d == 1);
    }
    return bad;
}

std::uint8_t encode_label(Label label) {
    switch (label) {
        case Label::Negative: return 0;
        case Label::Positive: return 255;
        case Label::Unknown: return 128;
    }
    return 128;
}

Label decode_label(std::uint8_t byte) {
    switch (byte) {
        case 0: return Label::Negative;
        case 255: return Label::Positive;
        case 128: return Label::Unknown;
        default: throw DataError("weak mask byte " + std::to_string(byte) + " is not one of {0, 128, 255}");
    }
}

}  // namespace fwseg
