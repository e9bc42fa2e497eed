#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "r2g/scene.hpp"

namespace r2g {

struct RelationConfig {
    /// Ordered relation-type tokens (T types).
    std::vector<std::string> relation_set = default_relation_set();
    double near_factor = 1.5;   // x mean pair diagonal
    double support_gap = 0.05;  // meters, scaled by scene scale
    double overlap_min = 0.2;   // min horizontal footprint IoU
    int top_k = 2;              // category truncation for superlatives

    static std::vector<std::string> default_relation_set();
    void validate() const;
};

/// Surface phrases for a relation token, render-default first
/// ("supporting" renders/parses as "on": the edge anchor->target labeled
/// `supporting` is what the utterance "the <target> on the <anchor>" names).
const std::map<std::string, std::vector<std::string>>& relation_surface_phrases();

enum class DistanceKind { Farther, Closer };
enum class SizeKind { Biggest, Smallest, Tallest, Longest, Widest };

DistanceKind parse_distance_kind(const std::string& s);  // "farthest"/"farther" or "closest"/"closer"
SizeKind parse_size_kind(const std::string& s);

/// 1 iff x is strictly farther (resp. closer) to z than y; exact ties are 0.
int indicator_distance(const Scene& scene, const std::string& z, const std::string& x, const std::string& y,
                       DistanceKind kind);

/// Horizontal footprint IoU of two (possibly rotated) boxes.
double footprint_iou(const BoundingBox& a, const BoundingBox& b);

/// Scene scale factor: median object box diagonal. Size-relative
/// thresholds multiply by this, which makes the deterministic relations
/// invariant under rigid translation and uniform scaling.
double scene_scale(const Scene& scene);

/// Deterministic pairwise relations for the ordered pair (z, x), evaluated
/// over the non-superlative tokens of config.relation_set. Values in {0,1}.
/// Directions: above(z,x) means "x is above z"; supporting(z,x) means
/// "z supports x" (x rests on z); front(z,x) means "x is in front of z"
/// in z's yaw frame.
std::map<std::string, double> geometric_relations(const Scene& scene, const RelationConfig& config,
                                                  const std::string& z, const std::string& x);

/// Probability that x is the farthest (closest) object of its category from
/// anchor z, per-object category distributions truncated to their own top-K
/// (truncated mass counts as "not that category", no renormalization).
/// Product form: R(z,x) = sum_k P_x(k) * prod_y [I(z,x,y) P_y(k) + (1 - P_y(k))].
double superlative_probability(const Scene& scene, const std::string& z, const std::string& x, DistanceKind kind,
                               int top_k);

/// Literal power-set expansion of the same quantity; oracle for the product
/// form. Requires N <= 16.
double superlative_probability_enumerated(const Scene& scene, const std::string& z, const std::string& x,
                                          DistanceKind kind, int top_k);

struct MonteCarloEstimate {
    double estimate = 0.0;
    double stderr_ = 0.0;
};

/// Sampling oracle: draws one category per object from its untruncated
/// distribution and counts the superlative event.
MonteCarloEstimate superlative_probability_montecarlo(const Scene& scene, const std::string& z,
                                                      const std::string& x, DistanceKind kind,
                                                      std::size_t samples, std::uint64_t seed);

/// Anchor-free size superlatives (biggest/smallest by volume, tallest by
/// height, longest by max horizontal extent, widest by min horizontal
/// extent); same truncated-product machinery as the distance superlatives.
double size_superlative_probability(const Scene& scene, const std::string& x, SizeKind kind, int top_k);

/// Power-set oracle for the size superlatives. Requires N <= 16.
double size_superlative_probability_enumerated(const Scene& scene, const std::string& x, SizeKind kind, int top_k);

}  // namespace r2g
