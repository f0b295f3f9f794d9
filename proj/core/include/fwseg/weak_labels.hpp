#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fwseg/grid.hpp"

namespace fwseg {

/// Dense ground truth: 0 negative, 1 positive.
using DenseMask = BinaryGrid;

enum class Label : std::uint8_t {
    Negative = 0,
    Positive = 1,
    Unknown = 2,
};

/// Trinary sparse annotation.
using WeakMask = Grid<Label>;

enum class AnnotationStyle { Points, Grid, Scribbles, Skeleton };
enum class Phase { Train, Test };

std::string_view to_string(AnnotationStyle style);
AnnotationStyle parse_style(std::string_view name);

/// Sparsity knobs per annotation style. Fields a style does not use stay at
/// zero. radius == 0 means "no final dilation".
struct SparsityParams {
    AnnotationStyle style = AnnotationStyle::Points;
    int n_pix = 0;            // points
    int radius = 0;           // all styles
    int spacing = 0;          // grid
    double proportion = 0.0;  // scribbles
    std::uint64_t seed = 0;

    /// "n_pix=5;radius=2" style summary of the style-relevant fields (no seed).
    std::string describe() const;
    /// Parses the `describe()` format (',' or ';' separated key=value).
    static SparsityParams parse(AnnotationStyle style, std::string_view text);

    friend bool operator==(const SparsityParams&, const SparsityParams&) = default;
};

/// Validates that the fields required by `p.style` are present and in range.
void validate(const SparsityParams& p);

/// Pixels whose known label disagrees with the dense mask become Unknown.
WeakMask fix_integrity(const DenseMask& dense, const WeakMask& weak);

WeakMask weak_points(const DenseMask& dense, const SparsityParams& params);
WeakMask weak_grid(const DenseMask& dense, const SparsityParams& params);
WeakMask weak_scribbles(const DenseMask& dense, const SparsityParams& params);
WeakMask weak_skeleton(const DenseMask& dense, const SparsityParams& params);

/// Dispatches on params.style.
WeakMask sparsify(const DenseMask& dense, const SparsityParams& params);

/// Train phase: uniform draw from the training ranges. Test phase: the
/// `seed % grid size`-th point of test_sparsity_grid(style).
SparsityParams sample_sparsity_params(AnnotationStyle style, Phase phase, std::uint64_t seed);

/// The enumerated evaluation grid for a style.
std::vector<SparsityParams> test_sparsity_grid(AnnotationStyle style);

/// Radius used for the outer/inner shape offset before contour extraction in
/// the scribbles and skeleton styles (a 4-connected single step).
inline constexpr int kShapeOffsetRadius = 1;

// Helpers shared by tests and the episode sampler.
std::size_t count_label(const WeakMask& weak, Label label);
/// Number of pixels whose known label disagrees with `dense`.
std::size_t integrity_violations(const DenseMask& dense, const WeakMask& weak);
/// Unknown everywhere except the dense labels at the grid lattice (no dilation).
WeakMask grid_anchors(const DenseMask& dense, int spacing);

/// Encodes 0 -> 0, 1 -> 255, Unknown -> 128 (the on-disk weak mask format).
std::uint8_t encode_label(Label label);
Label decode_label(std::uint8_t byte);

}  // namespace fwseg
