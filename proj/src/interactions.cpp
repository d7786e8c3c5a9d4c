#include "advot/interactions.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdint>
#include <functional>
#include <thread>
#include <unordered_map>
#include <unordered_set>

namespace advot {

std::vector<int> Interaction::label_set() const {
  std::vector<int> labels;
  labels.reserve(members.size());
  for (const auto& [cls, local] : members) labels.push_back(cls);
  return labels;
}

std::size_t InteractionComplex::total_count() const {
  std::size_t count = 0;
  for (const auto& group : groups) count += group.interactions.size();
  return count;
}

int InteractionComplex::max_order() const {
  int order = 0;
  for (const auto& group : groups)
    order = std::max(order, static_cast<int>(group.labels.size()));
  return order;
}

std::map<int, std::size_t> count_by_order(const InteractionComplex& complex) {
  std::map<int, std::size_t> counts;
  for (const auto& group : complex.groups)
    counts[static_cast<int>(group.labels.size())] += group.interactions.size();
  return counts;
}

namespace {

using Members = std::vector<std::pair<int, int>>;

struct MembersHash {
  std::size_t operator()(const Members& members) const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& [cls, local] : members) {
      h = (h ^ static_cast<std::uint64_t>(cls)) * 0x100000001b3ULL;
      h = (h ^ static_cast<std::uint64_t>(local)) * 0x100000001b3ULL;
    }
    return static_cast<std::size_t>(h);
  }
};

PointMatrix gather_points(const LabeledPointCloud& cloud, const Members& members) {
  PointMatrix pts(members.size(), cloud.dim());
  for (size_t r = 0; r < members.size(); ++r)
    pts.row(r) = cloud.points.row(cloud.global_index(members[r].first, members[r].second));
  return pts;
}

void run_chunked(int threads, std::size_t n,
                 const std::function<void(std::size_t, std::size_t)>& body) {
  if (threads <= 1 || n < 2) {
    body(0, n);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back(body, begin, end);
  }
  for (auto& t : pool) t.join();
}

}  // namespace

InteractionComplex build_complex(const LabeledPointCloud& cloud, double eps,
                                 Metric metric, int level,
                                 const ComplexOptions& opts) {
  if (!(eps > 0)) throw std::invalid_argument("build_complex: eps must be positive");
  if (level < 1) throw std::invalid_argument("build_complex: level must be >= 1");
  level = std::min(level, cloud.num_classes);

  InteractionComplex complex;
  complex.eps = eps;
  complex.metric = metric;
  complex.level = level;

  const double pair_cutoff = 2.0 * eps * (1.0 + kFeasibilityTolerance);
  std::size_t total = 0;
  const auto check_budget = [&](std::size_t added) {
    total += added;
    if (total > opts.max_interactions)
      throw BudgetExceededError(
          "interaction budget exceeded: more than " +
          std::to_string(opts.max_interactions) + " interactions at eps=" +
          std::to_string(eps));
  };

  // k = 1: every point of every class.
  for (int cls = 0; cls < cloud.num_classes; ++cls) {
    InteractionGroup group;
    group.labels = {cls};
    group.interactions.reserve(cloud.class_size(cls));
    for (int local = 0; local < cloud.class_size(cls); ++local) {
      Interaction inter;
      inter.members = {{cls, local}};
      inter.witness = cloud.points.row(cloud.global_index(cls, local)).transpose();
      group.interactions.push_back(std::move(inter));
    }
    check_budget(group.interactions.size());
    complex.groups.push_back(std::move(group));
  }
  if (level == 1) return complex;

  // k = 2: direct cross-class distance checks; witness is the midpoint.
  std::vector<std::pair<int, int>> class_pairs;
  for (int a = 0; a < cloud.num_classes; ++a)
    for (int b = a + 1; b < cloud.num_classes; ++b) class_pairs.emplace_back(a, b);

  std::vector<std::vector<Interaction>> pair_results(class_pairs.size());
  run_chunked(opts.threads, class_pairs.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t idx = begin; idx < end; ++idx) {
      const auto [a, b] = class_pairs[idx];
      auto& out = pair_results[idx];
      for (int la = 0; la < cloud.class_size(a); ++la) {
        const auto pa = cloud.points.row(cloud.global_index(a, la));
        for (int lb = 0; lb < cloud.class_size(b); ++lb) {
          const auto pb = cloud.points.row(cloud.global_index(b, lb));
          const double d = distance(pa.transpose(), pb.transpose(), metric);
          if (d > pair_cutoff) continue;
          Interaction inter;
          inter.members = {{a, la}, {b, lb}};
          inter.witness = (0.5 * (pa + pb)).transpose();
          out.push_back(std::move(inter));
        }
      }
    }
  });
  for (size_t idx = 0; idx < class_pairs.size(); ++idx) {
    if (pair_results[idx].empty()) continue;
    check_budget(pair_results[idx].size());
    InteractionGroup group;
    group.labels = {class_pairs[idx].first, class_pairs[idx].second};
    group.interactions = std::move(pair_results[idx]);
    complex.groups.push_back(std::move(group));
  }

  // k >= 3: join size-(k-1) interactions sharing a (k-2)-subset, then run the
  // witness test on deduplicated candidates.
  std::vector<const Interaction*> previous;
  for (const auto& group : complex.groups)
    if (group.labels.size() == 2)
      for (const auto& inter : group.interactions) previous.push_back(&inter);

  for (int k = 3; k <= level && !previous.empty(); ++k) {
    std::unordered_map<Members, std::vector<const Interaction*>, MembersHash> buckets;
    for (const Interaction* inter : previous) {
      Members subset(inter->members);
      for (size_t drop = 0; drop < inter->members.size(); ++drop) {
        subset.erase(subset.begin() + drop);
        buckets[subset].push_back(inter);
        subset.insert(subset.begin() + drop, inter->members[drop]);
      }
    }

    std::unordered_set<Members, MembersHash> seen;
    std::vector<Members> candidates;
    for (const auto& [subset, bucket] : buckets) {
      for (size_t i = 0; i < bucket.size(); ++i) {
        for (size_t j = i + 1; j < bucket.size(); ++j) {
          // Each side contributes one member beyond the shared subset.
          std::pair<int, int> extra_i{-1, -1}, extra_j{-1, -1};
          for (const auto& m : bucket[i]->members)
            if (std::find(subset.begin(), subset.end(), m) == subset.end()) extra_i = m;
          for (const auto& m : bucket[j]->members)
            if (std::find(subset.begin(), subset.end(), m) == subset.end()) extra_j = m;
          if (extra_i.first == extra_j.first) continue;  // labels must be distinct
          const auto gi = cloud.global_index(extra_i.first, extra_i.second);
          const auto gj = cloud.global_index(extra_j.first, extra_j.second);
          if (distance(cloud.points.row(gi).transpose(),
                       cloud.points.row(gj).transpose(), metric) > pair_cutoff)
            continue;  // necessary condition: all pairwise distances <= 2 eps
          Members merged(subset);
          merged.push_back(extra_i);
          merged.push_back(extra_j);
          std::sort(merged.begin(), merged.end());
          if (seen.insert(merged).second) candidates.push_back(std::move(merged));
        }
      }
    }
    std::sort(candidates.begin(), candidates.end());

    std::vector<WitnessResult> witness_results(candidates.size());
    run_chunked(opts.threads, candidates.size(), [&](std::size_t begin, std::size_t end) {
      for (std::size_t idx = begin; idx < end; ++idx)
        witness_results[idx] =
            common_ball_witness(gather_points(cloud, candidates[idx]), eps, metric);
    });

    std::map<std::vector<int>, std::vector<Interaction>> accepted;
    std::size_t accepted_count = 0;
    for (std::size_t idx = 0; idx < candidates.size(); ++idx) {
      if (!witness_results[idx].feasible) continue;
      Interaction inter;
      inter.members = candidates[idx];
      inter.witness = *witness_results[idx].witness;
      accepted[inter.label_set()].push_back(std::move(inter));
      ++accepted_count;
    }
    check_budget(accepted_count);

    previous.clear();
    for (auto& [labels, interactions] : accepted) {
      InteractionGroup group;
      group.labels = labels;
      group.interactions = std::move(interactions);
      complex.groups.push_back(std::move(group));
      for (const auto& inter : complex.groups.back().interactions)
        previous.push_back(&inter);
    }
  }

  std::sort(complex.groups.begin(), complex.groups.end(),
            [](const InteractionGroup& a, const InteractionGroup& b) {
              if (a.labels.size() != b.labels.size())
                return a.labels.size() < b.labels.size();
              return a.labels < b.labels;
            });
  for (auto& group : complex.groups)
    std::sort(group.interactions.begin(), group.interactions.end(),
              [](const Interaction& a, const Interaction& b) {
                return a.members < b.members;
              });
  return complex;
}

nlohmann::json complex_to_json(const InteractionComplex& complex) {
  nlohmann::json doc;
  doc["eps"] = complex.eps;
  doc["metric"] = to_string(complex.metric);
  doc["level"] = complex.level;
  auto& groups = doc["groups"] = nlohmann::json::array();
  for (const auto& group : complex.groups) {
    for (const auto& inter : group.interactions) {
      nlohmann::json entry;
      entry["labels"] = group.labels;
      auto& members = entry["members"] = nlohmann::json::array();
      for (const auto& [cls, local] : inter.members)
        members.push_back({cls, local});
      entry["witness"] = std::vector<double>(
          inter.witness.data(), inter.witness.data() + inter.witness.size());
      groups.push_back(std::move(entry));
    }
  }
  return doc;
}

InteractionComplex complex_from_json(const nlohmann::json& doc) {
  InteractionComplex complex;
  complex.eps = doc.at("eps").get<double>();
  complex.metric = metric_from_string(doc.at("metric").get<std::string>());
  complex.level = doc.at("level").get<int>();
  std::map<std::vector<int>, std::vector<Interaction>> grouped;
  for (const auto& entry : doc.at("groups")) {
    Interaction inter;
    for (const auto& member : entry.at("members"))
      inter.members.emplace_back(member.at(0).get<int>(), member.at(1).get<int>());
    const auto witness = entry.at("witness").get<std::vector<double>>();
    inter.witness = Eigen::Map<const Eigen::VectorXd>(witness.data(), witness.size());
    grouped[entry.at("labels").get<std::vector<int>>()].push_back(std::move(inter));
  }
  for (auto& [labels, interactions] : grouped) {
    InteractionGroup group;
    group.labels = labels;
    group.interactions = std::move(interactions);
    std::sort(group.interactions.begin(), group.interactions.end(),
              [](const Interaction& a, const Interaction& b) {
                return a.members < b.members;
              });
    complex.groups.push_back(std::move(group));
  }
  std::sort(complex.groups.begin(), complex.groups.end(),
            [](const InteractionGroup& a, const InteractionGroup& b) {
              if (a.labels.size() != b.labels.size())
                return a.labels.size() < b.labels.size();
              return a.labels < b.labels;
            });
  return complex;
}

std::vector<std::pair<int, int>> flat_columns(const InteractionComplex& complex) {
  std::vector<std::pair<int, int>> columns;
  columns.reserve(complex.total_count());
  for (int g = 0; g < static_cast<int>(complex.groups.size()); ++g)
    for (int i = 0; i < static_cast<int>(complex.groups[g].interactions.size()); ++i)
      columns.emplace_back(g, i);
  return columns;
}

}  // namespace advot
