#include "r2g/relations.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include "r2g/rng.hpp"

namespace r2g {

namespace {

using Poly = std::vector<Eigen::Vector2d>;

double polygon_area(const Poly& p) {
    double a = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const auto& u = p[i];
        const auto& v = p[(i + 1) % p.size()];
        a += u.x() * v.y() - v.x() * u.y();
    }
    return 0.5 * std::abs(a);
}

// Sutherland-Hodgman clip of convex subject against convex clip polygon (CCW).
Poly clip_polygon(Poly subject, const Poly& clip) {
    for (std::size_t i = 0; i < clip.size() && !subject.empty(); ++i) {
        const Eigen::Vector2d a = clip[i];
        const Eigen::Vector2d b = clip[(i + 1) % clip.size()];
        const Eigen::Vector2d edge = b - a;
        auto inside = [&](const Eigen::Vector2d& p) {
            return edge.x() * (p.y() - a.y()) - edge.y() * (p.x() - a.x()) >= 0.0;
        };
        auto intersect = [&](const Eigen::Vector2d& p, const Eigen::Vector2d& q) {
            Eigen::Vector2d d = q - p;
            double denom = d.x() * edge.y() - d.y() * edge.x();  // cross(d, edge)
            double num = (a.x() - p.x()) * edge.y() - (a.y() - p.y()) * edge.x();
            double t = denom == 0.0 ? 0.0 : num / denom;
            return Eigen::Vector2d(p + t * d);
        };
        Poly out;
        for (std::size_t j = 0; j < subject.size(); ++j) {
            const Eigen::Vector2d& cur = subject[j];
            const Eigen::Vector2d& prev = subject[(j + subject.size() - 1) % subject.size()];
            bool cur_in = inside(cur), prev_in = inside(prev);
            if (cur_in) {
                if (!prev_in) out.push_back(intersect(prev, cur));
                out.push_back(cur);
            } else if (prev_in) {
                out.push_back(intersect(prev, cur));
            }
        }
        subject = std::move(out);
    }
    return subject;
}

double center_distance(const ObjectProposal& a, const ObjectProposal& b) {
    return (a.box.center - b.box.center).norm();
}

const ObjectProposal& get(const Scene& scene, const std::string& id) { return scene.proposal(id); }

/// Truncated category distribution: top-K entries by (probability desc,
/// token asc); dropped mass is not renormalized.
std::map<std::string, double> truncate_dist(const std::map<std::string, double>& dist, int top_k) {
    if (top_k <= 0 || static_cast<std::size_t>(top_k) >= dist.size()) return dist;
    std::vector<std::pair<std::string, double>> entries(dist.begin(), dist.end());
    std::stable_sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    entries.resize(static_cast<std::size_t>(top_k));
    return {entries.begin(), entries.end()};
}

double prob_of(const std::map<std::string, double>& dist, const std::string& token) {
    auto it = dist.find(token);
    return it == dist.end() ? 0.0 : it->second;
}

// Shared machinery for the category-conditional superlatives: the event
// "x has category k and beats every other category-k object under `wins`".
struct SuperlativeProblem {
    const Scene& scene;
    std::size_t x;
    std::vector<std::size_t> competitors;
    std::function<int(std::size_t, std::size_t)> wins;  // wins(x, y) in {0,1}
    int top_k;
};

double superlative_product(const SuperlativeProblem& prob) {
    auto px = truncate_dist(prob.scene.proposals[prob.x].category_dist, prob.top_k);
    double total = 0.0;
    for (const auto& [k, pxk] : px) {
        double term = pxk;
        for (std::size_t y : prob.competitors) {
            double pyk = prob_of(truncate_dist(prob.scene.proposals[y].category_dist, prob.top_k), k);
            term *= prob.wins(prob.x, y) * pyk + (1.0 - pyk);
        }
        total += term;
    }
    return total;
}

double superlative_enumerated(const SuperlativeProblem& prob) {
    if (prob.scene.size() > 16) fail("TooLarge", "power-set enumeration limited to N <= 16");
    auto px = truncate_dist(prob.scene.proposals[prob.x].category_dist, prob.top_k);
    const std::size_t m = prob.competitors.size();
    double total = 0.0;
    for (const auto& [k, pxk] : px) {
        double sum = 0.0;
        for (std::uint64_t mask = 0; mask < (1ULL << m); ++mask) {
            double term = 1.0;
            for (std::size_t i = 0; i < m; ++i) {
                std::size_t y = prob.competitors[i];
                double pyk = prob_of(truncate_dist(prob.scene.proposals[y].category_dist, prob.top_k), k);
                if (mask & (1ULL << i))
                    term *= prob.wins(prob.x, y) * pyk;
                else
                    term *= 1.0 - pyk;
            }
            sum += term;
        }
        total += pxk * sum;
    }
    return total;
}

std::vector<std::size_t> others(const Scene& scene, std::initializer_list<std::size_t> excluded) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < scene.size(); ++i)
        if (std::find(excluded.begin(), excluded.end(), i) == excluded.end()) out.push_back(i);
    return out;
}

std::size_t index_or_fail(const Scene& scene, const std::string& id) {
    int i = scene.index_of(id);
    if (i < 0) fail("UnknownId", "'" + id + "' not in scene " + scene.id);
    return static_cast<std::size_t>(i);
}

std::function<int(std::size_t, std::size_t)> distance_wins(const Scene& scene, std::size_t z, DistanceKind kind) {
    return [&scene, z, kind](std::size_t x, std::size_t y) {
        double dx = (scene.proposals[x].box.center - scene.proposals[z].box.center).norm();
        double dy = (scene.proposals[y].box.center - scene.proposals[z].box.center).norm();
        if (kind == DistanceKind::Farther) return dx > dy ? 1 : 0;
        return dx < dy ? 1 : 0;
    };
}

double size_measure(const BoundingBox& box, SizeKind kind) {
    switch (kind) {
        case SizeKind::Biggest:
        case SizeKind::Smallest:
            return box.volume();
        case SizeKind::Tallest:
            return box.extents.z();
        case SizeKind::Longest:
            return std::max(box.extents.x(), box.extents.y());
        case SizeKind::Widest:
            return std::min(box.extents.x(), box.extents.y());
    }
    return 0.0;
}

std::function<int(std::size_t, std::size_t)> size_wins(const Scene& scene, SizeKind kind) {
    return [&scene, kind](std::size_t x, std::size_t y) {
        double mx = size_measure(scene.proposals[x].box, kind);
        double my = size_measure(scene.proposals[y].box, kind);
        if (kind == SizeKind::Smallest) return mx < my ? 1 : 0;
        return mx > my ? 1 : 0;
    };
}

}  // namespace

std::vector<std::string> RelationConfig::default_relation_set() {
    return {"above", "below", "supporting", "supported-by", "near",
            "beside", "front", "behind", "farthest", "closest"};
}

void RelationConfig::validate() const {
    if (relation_set.empty()) fail("SchemaViolation", "relation_set must be non-empty");
    if (near_factor <= 0.0) fail("SchemaViolation", "near_factor must be positive");
    if (top_k < 1) fail("SchemaViolation", "top_k must be >= 1");
}

const std::map<std::string, std::vector<std::string>>& relation_surface_phrases() {
    static const std::map<std::string, std::vector<std::string>> phrases = {
        {"above", {"above", "over"}},
        {"below", {"below", "underneath"}},
        {"supporting", {"on", "on top of", "sitting on"}},
        {"supported-by", {"under", "beneath"}},
        {"near", {"near", "next to", "close to", "by"}},
        {"beside", {"beside", "alongside"}},
        {"front", {"in front of"}},
        {"behind", {"behind"}},
        {"farthest", {"farthest from", "furthest from"}},
        {"closest", {"closest to", "nearest to"}},
    };
    return phrases;
}

DistanceKind parse_distance_kind(const std::string& s) {
    if (s == "farthest" || s == "farther") return DistanceKind::Farther;
    if (s == "closest" || s == "closer") return DistanceKind::Closer;
    fail("SchemaViolation", "unknown distance kind '" + s + "'");
}

SizeKind parse_size_kind(const std::string& s) {
    if (s == "biggest") return SizeKind::Biggest;
    if (s == "smallest") return SizeKind::Smallest;
    if (s == "tallest") return SizeKind::Tallest;
    if (s == "longest") return SizeKind::Longest;
    if (s == "widest") return SizeKind::Widest;
    fail("SchemaViolation", "unknown size kind '" + s + "'");
}

int indicator_distance(const Scene& scene, const std::string& z, const std::string& x, const std::string& y,
                       DistanceKind kind) {
    if (z == x || z == y || x == y) fail("SchemaViolation", "indicator requires distinct ids");
    std::size_t zi = index_or_fail(scene, z);
    return distance_wins(scene, zi, kind)(index_or_fail(scene, x), index_or_fail(scene, y));
}

double footprint_iou(const BoundingBox& a, const BoundingBox& b) {
    auto fa = a.footprint();
    auto fb = b.footprint();
    Poly pa(fa.begin(), fa.end()), pb(fb.begin(), fb.end());
    Poly inter = clip_polygon(pa, pb);
    if (inter.size() < 3) return 0.0;
    double ai = polygon_area(inter);
    double au = polygon_area(pa) + polygon_area(pb) - ai;
    return au > 0.0 ? ai / au : 0.0;
}

double scene_scale(const Scene& scene) {
    std::vector<double> diags;
    diags.reserve(scene.size());
    for (const auto& p : scene.proposals) diags.push_back(p.box.diagonal());
    std::sort(diags.begin(), diags.end());
    std::size_t n = diags.size();
    return n % 2 == 1 ? diags[n / 2] : 0.5 * (diags[n / 2 - 1] + diags[n / 2]);
}

std::map<std::string, double> geometric_relations(const Scene& scene, const RelationConfig& config,
                                                  const std::string& z_id, const std::string& x_id) {
    if (z_id == x_id) fail("SchemaViolation", "no self-relations");
    const ObjectProposal& z = get(scene, z_id);
    const ObjectProposal& x = get(scene, x_id);
    const double scale = scene_scale(scene);

    const double iou = footprint_iou(z.box, x.box);
    const double gap_x_over_z = x.box.bottom() - z.box.top();
    const double gap_z_over_x = z.box.bottom() - x.box.top();
    const bool overlap_ok = iou >= config.overlap_min;
    const double support_gap = config.support_gap * scale;

    const double dist = center_distance(z, x);
    const double near_thresh = config.near_factor * 0.5 * (z.box.diagonal() + x.box.diagonal());
    const bool near = dist <= near_thresh;
    const double z_overlap = std::min(z.box.top(), x.box.top()) - std::max(z.box.bottom(), x.box.bottom());

    // offset of x in z's yaw frame; +x is z's facing direction
    const double c = std::cos(z.box.yaw), s = std::sin(z.box.yaw);
    const Eigen::Vector2d d(x.box.center.x() - z.box.center.x(), x.box.center.y() - z.box.center.y());
    const double lon = c * d.x() + s * d.y();
    const double lat = -s * d.x() + c * d.y();

    std::map<std::string, double> out;
    for (const auto& token : config.relation_set) {
        double v = 0.0;
        if (token == "above")
            v = (overlap_ok && gap_x_over_z > 0.0) ? 1.0 : 0.0;
        else if (token == "below")
            v = (overlap_ok && gap_z_over_x > 0.0) ? 1.0 : 0.0;
        else if (token == "supporting")
            v = (overlap_ok && std::abs(gap_x_over_z) <= support_gap && x.box.center.z() > z.box.center.z()) ? 1.0 : 0.0;
        else if (token == "supported-by")
            v = (overlap_ok && std::abs(gap_z_over_x) <= support_gap && z.box.center.z() > x.box.center.z()) ? 1.0 : 0.0;
        else if (token == "near")
            v = near ? 1.0 : 0.0;
        else if (token == "beside")
            v = (near && z_overlap > 0.0) ? 1.0 : 0.0;
        else if (token == "front")
            v = (lon > 0.0 && std::abs(lat) < lon) ? 1.0 : 0.0;
        else if (token == "behind")
            v = (lon < 0.0 && std::abs(lat) < -lon) ? 1.0 : 0.0;
        else
            continue;  // superlatives are probabilistic, handled elsewhere
        out[token] = v;
    }
    return out;
}

double superlative_probability(const Scene& scene, const std::string& z, const std::string& x, DistanceKind kind,
                               int top_k) {
    if (z == x) fail("SchemaViolation", "anchor and target must differ");
    std::size_t zi = index_or_fail(scene, z), xi = index_or_fail(scene, x);
    return superlative_product({scene, xi, others(scene, {zi, xi}), distance_wins(scene, zi, kind), top_k});
}

double superlative_probability_enumerated(const Scene& scene, const std::string& z, const std::string& x,
                                          DistanceKind kind, int top_k) {
    if (z == x) fail("SchemaViolation", "anchor and target must differ");
    std::size_t zi = index_or_fail(scene, z), xi = index_or_fail(scene, x);
    return superlative_enumerated({scene, xi, others(scene, {zi, xi}), distance_wins(scene, zi, kind), top_k});
}

MonteCarloEstimate superlative_probability_montecarlo(const Scene& scene, const std::string& z,
                                                      const std::string& x, DistanceKind kind,
                                                      std::size_t samples, std::uint64_t seed) {
    if (samples < 1) fail("SchemaViolation", "samples must be >= 1");
    std::size_t zi = index_or_fail(scene, z), xi = index_or_fail(scene, x);
    auto wins = distance_wins(scene, zi, kind);
    auto competitors = others(scene, {zi, xi});

    // per-object CDF over sorted category tokens (untruncated)
    std::vector<std::vector<std::pair<std::string, double>>> cdf(scene.size());
    for (std::size_t i = 0; i < scene.size(); ++i) {
        double acc = 0.0;
        for (const auto& [token, p] : scene.proposals[i].category_dist) {
            acc += p;
            cdf[i].push_back({token, acc});
        }
    }
    auto draw = [&](std::size_t i, Rng& rng) -> const std::string& {
        double u = rng.uniform();
        for (const auto& [token, acc] : cdf[i])
            if (u <= acc) return token;
        return cdf[i].back().first;
    };

    Rng rng(seed);
    std::size_t hits = 0;
    for (std::size_t s = 0; s < samples; ++s) {
        const std::string& kx = draw(xi, rng);
        bool ok = true;
        for (std::size_t y : competitors) {
            if (draw(y, rng) == kx && wins(xi, y) == 0) {
                ok = false;
                // keep drawing remaining objects to hold the stream length fixed
            }
        }
        if (ok) ++hits;
    }
    double p = static_cast<double>(hits) / static_cast<double>(samples);
    double se = std::sqrt(p * (1.0 - p) / static_cast<double>(samples));
    return {p, se};
}

double size_superlative_probability(const Scene& scene, const std::string& x, SizeKind kind, int top_k) {
    std::size_t xi = index_or_fail(scene, x);
    return superlative_product({scene, xi, others(scene, {xi}), size_wins(scene, kind), top_k});
}

double size_superlative_probability_enumerated(const Scene& scene, const std::string& x, SizeKind kind, int top_k) {
    std::size_t xi = index_or_fail(scene, x);
    return superlative_enumerated({scene, xi, others(scene, {xi}), size_wins(scene, kind), top_k});
}

}  // namespace r2g
