#include "treering/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "treering/errors.hpp"

namespace treering {

int InfluenceMap::band_of(int ray, double radius) const {
    const std::vector<double>& b = boundaries[ray];
    // Bands are half-open [b[k], b[k+1]); a radius on a boundary belongs
    // to the outer band.
    for (int k = 0; k < nb_rings; ++k) {
        if (radius >= b[k] && radius < b[k + 1]) return k;
    }
    return -1;
}

Ring sample_polygon_on_rays(const RingShape& shape, const SpiderWeb& web, RingSource source) {
    return make_ring(polygon_radii(shape.points, web), web, source);
}

std::vector<double> image_boundary_radii(const SpiderWeb& web, int width, int height) {
    std::vector<double> radii(web.nb_rays, 0.0);
    for (int i = 0; i < web.nb_rays; ++i) {
        const Point2 d = web.direction(i);
        double t = std::numeric_limits<double>::infinity();
        if (d.x > 0.0) t = std::min(t, (width - web.center.x) / d.x);
        if (d.x < 0.0) t = std::min(t, -web.center.x / d.x);
        if (d.y > 0.0) t = std::min(t, (height - web.center.y) / d.y);
        if (d.y < 0.0) t = std::min(t, -web.center.y / d.y);
        radii[i] = t;
    }
    return radii;
}

InfluenceMap build_influence_map(const std::vector<Ring>& gt, const SpiderWeb& web,
                                 const std::vector<double>& section_bound) {
    if (static_cast<int>(section_bound.size()) != web.nb_rays) {
        throw DimensionMismatch("section bound has " + std::to_string(section_bound.size()) +
                                " radii for a " + std::to_string(web.nb_rays) + "-ray web");
    }
    std::vector<const Ring*> ordered;
    ordered.reserve(gt.size());
    for (const Ring& ring : gt) {
        if (static_cast<int>(ring.radii.size()) != web.nb_rays) {
            throw DimensionMismatch("ground-truth ring sampled on " +
                                    std::to_string(ring.radii.size()) + " rays, web has " +
                                    std::to_string(web.nb_rays));
        }
        ordered.push_back(&ring);
    }
    std::sort(ordered.begin(), ordered.end(),
              [](const Ring* a, const Ring* b) { return a->mean_radius() < b->mean_radius(); });

    InfluenceMap map;
    map.nb_rings = static_cast<int>(ordered.size());
    map.nb_rays = web.nb_rays;
    map.boundaries.assign(web.nb_rays, {});
    for (int i = 0; i < web.nb_rays; ++i) {
        std::vector<double>& b = map.boundaries[i];
        b.reserve(map.nb_rings + 1);
        b.push_back(0.0);
        for (int k = 0; k + 1 < map.nb_rings; ++k) {
            const double inner = ordered[k]->radii[i];
            const double outer = ordered[k + 1]->radii[i];
            if (inner >= outer) {
                throw CrossingGTRings("ground-truth rings " + std::to_string(k) + " and " +
                                      std::to_string(k + 1) + " are not radially ordered on ray " +
                                      std::to_string(i));
            }
            b.push_back(0.5 * (inner + outer));
        }
        double outer_limit = section_bound[i];
        if (map.nb_rings > 0) {
            // Annotations may poke past the image border; keep the outer
            // band wide enough to contain its own ring.
            outer_limit = std::max(outer_limit, ordered.back()->radii[i] + 1e-9);
        }
        b.push_back(outer_limit);
    }
    return map;
}

double rmse(const Ring& d, const Ring& g) {
    if (d.radii.size() != g.radii.size()) {
        throw DimensionMismatch("rings sampled on " + std::to_string(d.radii.size()) + " and " +
                                std::to_string(g.radii.size()) + " rays");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < d.radii.size(); ++i) {
        const double diff = d.radii[i] - g.radii[i];
        sum += diff * diff;
    }
    return std::sqrt(sum / static_cast<double>(d.radii.size()));
}

Assignment assign(const std::vector<Ring>& detections, const std::vector<Ring>& gt,
                  const InfluenceMap& map, double th) {
    if (th <= 0.0 || th > 1.0) {
        throw Error("assign: th must be in (0, 1], got " + std::to_string(th));
    }
    // The influence map was built from rings sorted by mean radius; map
    // band indices back to the caller's gt order.
    std::vector<int> by_radius(gt.size());
    for (std::size_t i = 0; i < gt.size(); ++i) by_radius[i] = static_cast<int>(i);
    std::sort(by_radius.begin(), by_radius.end(), [&](int a, int b) {
        return gt[a].mean_radius() < gt[b].mean_radius();
    });

    struct Eligible {
        double dist;
        int det;
        int gt;
    };
    std::vector<Eligible> eligible;
    for (std::size_t d = 0; d < detections.size(); ++d) {
        std::vector<int> counts(map.nb_rings, 0);
        for (int i = 0; i < map.nb_rays; ++i) {
            const int band = map.band_of(i, detections[d].radii[i]);
            if (band >= 0) ++counts[band];
        }
        for (int band = 0; band < map.nb_rings; ++band) {
            // Strictly more than th of the nodes must fall in the band.
            if (counts[band] > th * map.nb_rays) {
                const int g = by_radius[band];
                eligible.push_back(
                    Eligible{rmse(detections[d], gt[g]), static_cast<int>(d), g});
            }
        }
    }
    std::sort(eligible.begin(), eligible.end(), [](const Eligible& a, const Eligible& b) {
        if (a.dist != b.dist) return a.dist < b.dist;
        if (a.det != b.det) return a.det < b.det;
        return a.gt < b.gt;
    });

    Assignment result;
    std::vector<char> det_used(detections.size(), 0);
    std::vector<char> gt_used(gt.size(), 0);
    for (const Eligible& e : eligible) {
        if (det_used[e.det] || gt_used[e.gt]) continue;
        det_used[e.det] = 1;
        gt_used[e.gt] = 1;
        result.matches.emplace_back(e.det, e.gt);
    }
    std::sort(result.matches.begin(), result.matches.end());
    for (std::size_t d = 0; d < detections.size(); ++d) {
        if (!det_used[d]) result.false_positives.push_back(static_cast<int>(d));
    }
    for (std::size_t g = 0; g < gt.size(); ++g) {
        if (!gt_used[g]) result.false_negatives.push_back(static_cast<int>(g));
    }
    return result;
}

EvalReport score(const Assignment& assignment, const std::vector<double>& match_rmse) {
    if (match_rmse.size() != assignment.matches.size()) {
        throw DimensionMismatch("got " + std::to_string(match_rmse.size()) + " RMSE values for " +
                                std::to_string(assignment.matches.size()) + " matches");
    }
    EvalReport report;
    report.tp = static_cast<int>(assignment.matches.size());
    report.fp = static_cast<int>(assignment.false_positives.size());
    report.fn = static_cast<int>(assignment.false_negatives.size());
    if (report.tp + report.fp > 0) {
        report.precision = static_cast<double>(report.tp) / (report.tp + report.fp);
    }
    if (report.tp + report.fn > 0) {
        report.recall = static_cast<double>(report.tp) / (report.tp + report.fn);
    }
    if (report.precision && report.recall && (*report.precision + *report.recall) > 0.0) {
        report.fscore = 2.0 * *report.precision * *report.recall /
                        (*report.precision + *report.recall);
    }
    report.rmse_per_ring.assign(assignment.matches.size() + assignment.false_negatives.size(),
                                std::nullopt);
    double sum = 0.0;
    for (std::size_t k = 0; k < assignment.matches.size(); ++k) {
        const int g = assignment.matches[k].second;
        if (g >= 0 && g < static_cast<int>(report.rmse_per_ring.size())) {
            report.rmse_per_ring[g] = match_rmse[k];
        }
        sum += match_rmse[k];
    }
    if (!match_rmse.empty()) {
        report.rmse_overall = sum / static_cast<double>(match_rmse.size());
    }
    return report;
}

std::vector<Ring> consensus_gt(const std::vector<std::vector<Ring>>& expert_annotations,
                               const SpiderWeb& web) {
    if (expert_annotations.empty()) {
        throw EmptyData("consensus_gt: no expert annotations");
    }
    const std::size_t nb_rings = expert_annotations.front().size();
    std::vector<std::vector<const Ring*>> ordered;  // per expert, rings by radial order
    for (const auto& expert : expert_annotations) {
        if (expert.size() != nb_rings) {
            throw RingCountMismatch("experts annotated " + std::to_string(nb_rings) + " and " +
                                    std::to_string(expert.size()) + " rings");
        }
        std::vector<const Ring*> rings;
        for (const Ring& r : expert) {
            if (static_cast<int>(r.radii.size()) != web.nb_rays) {
                throw DimensionMismatch("expert ring sampled on " +
                                        std::to_string(r.radii.size()) + " rays, web has " +
                                        std::to_string(web.nb_rays));
            }
            rings.push_back(&r);
        }
        std::sort(rings.begin(), rings.end(),
                  [](const Ring* a, const Ring* b) { return a->mean_radius() < b->mean_radius(); });
        ordered.push_back(std::move(rings));
    }
    std::vector<Ring> consensus;
    consensus.reserve(nb_rings);
    for (std::size_t k = 0; k < nb_rings; ++k) {
        std::vector<double> radii(web.nb_rays, 0.0);
        for (const auto& expert : ordered) {
            for (int i = 0; i < web.nb_rays; ++i) {
                radii[i] += expert[k]->radii[i];
            }
        }
        for (double& r : radii) r /= static_cast<double>(ordered.size());
        consensus.push_back(make_ring(std::move(radii), web, RingSource::GroundTruth));
    }
    return consensus;
}

double expert_rms(const std::vector<Ring>& expert, const std::vector<Ring>& consensus) {
    if (expert.size() != consensus.size()) {
        throw RingCountMismatch("expert has " + std::to_string(expert.size()) +
                                " rings, consensus has " + std::to_string(consensus.size()));
    }
    if (expert.empty()) {
        throw EmptyData("expert_rms: no rings to compare");
    }
    std::vector<const Ring*> e;
    std::vector<const Ring*> c;
    for (const Ring& r : expert) e.push_back(&r);
    for (const Ring& r : consensus) c.push_back(&r);
    const auto by_radius = [](const Ring* a, const Ring* b) {
        return a->mean_radius() < b->mean_radius();
    };
    std::sort(e.begin(), e.end(), by_radius);
    std::sort(c.begin(), c.end(), by_radius);
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < e.size(); ++k) {
        if (e[k]->radii.size() != c[k]->radii.size()) {
            throw DimensionMismatch("expert and consensus rings sampled on different ray counts");
        }
        for (std::size_t i = 0; i < e[k]->radii.size(); ++i) {
            const double diff = e[k]->radii[i] - c[k]->radii[i];
            sum += diff * diff;
            ++n;
        }
    }
    return std::sqrt(sum / static_cast<double>(n));
}

}  // namespace treering
