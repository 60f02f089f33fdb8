#include "rmgd/pipeline.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <sstream>

#include "rmgd/parallel.hpp"

namespace rmgd::pipeline {

std::string TrainBitsResult::report_csv() const {
  std::ostringstream out;
  out << "map,round,candidate,epsilon,admitted,max_corr,fold\n";
  for (const auto& rep : reports)
    for (const auto& r : rep.selection.rounds)
      out << map_name(rep.map) << ',' << r.round << ',' << r.candidate << ','
          << format_double(r.epsilon) << ',' << (r.admitted ? 1 : 0) << ','
          << format_double(r.max_corr) << ',' << r.fold << '\n';
  return out.str();
}

std::vector<Patch> preprocess_patch_set(const RawPatchSource& src,
                                        std::span<const std::uint32_t> ids,
                                        const PreprocessParams& params, int threads) {
  std::vector<Patch> patches(ids.size());
  parallel_chunks(ids.size(), 64, threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i)
      patches[i] = preprocess(src.patch64(ids[i]), params, ids[i],
                              src.point_ids[static_cast<std::size_t>(ids[i])]);
  });
  return patches;
}

LocalPairs localize_pairs(const PairDataset& ds) {
  LocalPairs lp;
  lp.patch_ids.reserve(ds.pairs.size() * 2);
  for (const auto& p : ds.pairs) {
    lp.patch_ids.push_back(p.a);
    lp.patch_ids.push_back(p.b);
  }
  std::sort(lp.patch_ids.begin(), lp.patch_ids.end());
  lp.patch_ids.erase(std::unique(lp.patch_ids.begin(), lp.patch_ids.end()), lp.patch_ids.end());
  auto local = [&](std::uint32_t id) {
    return static_cast<std::uint32_t>(
        std::lower_bound(lp.patch_ids.begin(), lp.patch_ids.end(), id) - lp.patch_ids.begin());
  };
  for (const auto& p : ds.pairs) {
    lp.pairs.a.push_back(local(p.a));
    lp.pairs.b.push_back(local(p.b));
    lp.pairs.label.push_back(p.label);
  }
  return lp;
}

TrainBitsResult train_bits(const RunConfig& cfg, const std::filesystem::path& data_root,
                           const std::filesystem::path& pair_file) {
  cfg.validate();
  const RawPatchSource src = load_patch_source(data_root);
  const PairDataset full = load_pair_list(pair_file, src);

  std::size_t n_match = cfg.train_matches;
  if (n_match == 0) {
    n_match = full.match_count();
    if (cfg.pair_ratio > 0)
      n_match = std::min(n_match, static_cast<std::size_t>(static_cast<double>(full.nonmatch_count()) /
                                                           cfg.pair_ratio));
  }
  const PairDataset train = sample_training_pairs(full, n_match, cfg.pair_ratio, cfg.seed);
  const LocalPairs lp = localize_pairs(train);

  const PreprocessParams pp{cfg.patch_size, cfg.gaussian_kernel, cfg.gaussian_sigma};
  const std::vector<Patch> patches = preprocess_patch_set(src, lp.patch_ids, pp, cfg.threads);

  const PoolingGeometry geom = build_geometry(cfg.patch_size, cfg.divisions);
  const auto region_pairs = enumerate_region_pairs(geom);

  // Guardrail: region means plus the per-survivor mismatch masks dominate.
  {
    const std::uint64_t means_bytes =
        static_cast<std::uint64_t>(geom.regions.size()) * patches.size() * 8;
    const std::uint64_t mask_bytes =
        static_cast<std::uint64_t>(region_pairs.size() / 4 + 1) * ((lp.pairs.size() + 7) / 8);
    const std::uint64_t need = means_bytes + mask_bytes;
    if (need > cfg.memory_cap_mb * (1ull << 20))
      throw ResourceError("bit selection needs about " + std::to_string(need >> 20) +
                          " MiB, above the cap of " + std::to_string(cfg.memory_cap_mb) +
                          " MiB; reduce training pairs or raise memory_cap_mb");
  }

  TrainBitsResult out;
  out.formula_pairs = geom.formula_pair_count();
  out.effective_pairs = geom.effective_pair_count();
  out.removed_regions = geom.removed_region_count();

  DescriptorModel& model = out.model;
  model.patch_size = cfg.patch_size;
  model.divisions = cfg.divisions;
  model.preprocess = {cfg.gaussian_kernel, cfg.gaussian_sigma};
  model.train_set = data_root.filename().string();
  model.config_hash = cfg.hash();
  model.seed = cfg.seed;

  for (MapId map : cfg.maps) {
    const RegionMeansMatrix means = extract_region_means(patches, map, geom, cfg.threads);
    const MeansCandidateProvider provider(means, region_pairs);

    MapSelectionReport rep;
    rep.map = map;
    const BitStats stats = compute_bit_stats(provider, lp.pairs, cfg.threads);
    const auto survivors = prefilter(stats, provider.candidate_count(), &rep.prefilter_warning);

    SelectionParams sp;
    sp.n_bits = cfg.n_bits;
    sp.t_c = cfg.t_c;
    sp.folds = cfg.folds;
    sp.literal_eq2 = cfg.literal_eq2;
    sp.literal_phi_sign = cfg.literal_phi_sign;
    sp.threads = cfg.threads;
    rep.selection = select_bits(provider, survivors, lp.pairs, sp);

    SelectedBits sb;
    sb.map = map;
    for (std::uint32_t cand : rep.selection.chosen)
      sb.pairs.push_back(
          {geom.regions[region_pairs[cand].first], geom.regions[region_pairs[cand].second]});
    model.maps.push_back(std::move(sb));
    out.reports.push_back(std::move(rep));
  }

  for (std::size_t mi = 0; mi < model.maps.size(); ++mi)
    model.groups.push_back({static_cast<int>(mi), 0,
                            static_cast<std::uint32_t>(model.maps[mi].pairs.size())});
  model.validate();
  return out;
}

Regularizer regularizer_from_name(const std::string& name) {
  if (name == "none") return Regularizer::None;
  if (name == "l1") return Regularizer::L1;
  if (name == "l2") return Regularizer::L2;
  throw ConfigError("regularizer must be one of none, l1, l2");
}

std::vector<RankingInstance> sample_instances(std::span<const DistanceVector> dist,
                                              std::span<const std::uint8_t> labels,
                                              std::uint64_t budget, std::uint64_t seed) {
  std::vector<std::size_t> matches, nonmatches;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? matches : nonmatches).push_back(i);
  if (matches.empty() || nonmatches.empty())
    throw DataError("weight training needs both matching and non-matching pairs");

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_m(0, matches.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_n(0, nonmatches.size() - 1);
  std::vector<RankingInstance> out;
  out.reserve(budget);
  const std::size_t groups = dist.empty() ? 0 : dist.front().size();
  for (std::uint64_t i = 0; i < budget; ++i) {
    const DistanceVector& dm = dist[matches[pick_m(rng)]];
    const DistanceVector& dn = dist[nonmatches[pick_n(rng)]];
    RankingInstance inst;
    inst.delta.resize(groups);
    for (std::size_t g = 0; g < groups; ++g)
      inst.delta[g] = static_cast<std::int32_t>(dm[g]) - static_cast<std::int32_t>(dn[g]);
    out.push_back(std::move(inst));
  }
  return out;
}

DescriptorModel train_weights(const RunConfig& cfg, DescriptorModel model,
                              const std::filesystem::path& data_root,
                              const std::filesystem::path& pair_file, Regularizer reg,
                              TrainingLog* log) {
  cfg.validate();
  if (cfg.subgroups > 1) model = build_subgroups(model, cfg.subgroups);
  model.config_hash = cfg.hash();
  model.seed = cfg.seed;

  if (reg == Regularizer::None) {
    model.weights.assign(model.groups.size(), 1.0);
    model.validate();
    return model;
  }

  const RawPatchSource src = load_patch_source(data_root);
  const PairDataset ds = load_pair_list(pair_file, src);
  const LocalPairs lp = localize_pairs(ds);

  const DescriptorExtractor extractor(model);
  const std::vector<Patch> patches =
      preprocess_patch_set(src, lp.patch_ids, PreprocessParams{model.patch_size,
                                                               model.preprocess.gaussian_kernel,
                                                               model.preprocess.gaussian_sigma},
                           cfg.threads);

  std::vector<Descriptor> descs(patches.size());
  parallel_chunks(patches.size(), 64, cfg.threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) descs[i] = extractor.extract(patches[i]);
  });

  std::vector<DistanceVector> dist(lp.pairs.size());
  parallel_chunks(lp.pairs.size(), 1024, cfg.threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i)
      dist[i] = group_distance_vector(descs[lp.pairs.a[i]], descs[lp.pairs.b[i]],
                                      extractor.layout());
  });

  const std::vector<RankingInstance> instances =
      sample_instances(dist, lp.pairs.label, cfg.instance_budget,
                       cfg.seed ^ 0x9e3779b97f4a7c15ull);

  WeightVector w;
  if (reg == Regularizer::L2) {
    L2Params p;
    p.mu2 = cfg.mu2;
    p.epochs = cfg.epochs;
    p.seed = cfg.seed;
    p.log_every = cfg.log_every;
    w = train_l2(instances, p, log);
  } else {
    RdaParams p;
    p.mu1 = cfg.mu1;
    p.gamma = cfg.gamma;
    p.iterations = cfg.instance_budget;
    p.seed = cfg.seed;
    p.log_every = cfg.log_every;
    w = train_l1_rda(instances, p, log);
  }
  model.weights = std::move(w.w);
  model.validate();
  return model;
}

EvalResult evaluate(const RunConfig& cfg, const DescriptorModel& model,
                    const std::filesystem::path& data_root,
                    const std::filesystem::path& pair_file) {
  cfg.validate();
  if (!model.finalized()) throw ConfigError("model has no weights; run train-weights first");
  const RawPatchSource src = load_patch_source(data_root);
  const PairDataset ds = load_pair_list(pair_file, src);

  const DescriptorExtractor extractor(model);
  const PreprocessParams pp{model.patch_size, model.preprocess.gaussian_kernel,
                            model.preprocess.gaussian_sigma};
  const WeightVector w{model.weights};
  const ScoredPairs scored = score_dataset(
      ds,
      [&](std::uint32_t id) {
        if (id >= src.patch_count()) throw DataError("patch id out of range: " + std::to_string(id));
        return preprocess(src.patch64(id), pp, id, src.point_ids[id]);
      },
      extractor, w, cfg.threads);

  EvalResult res;
  res.curve = roc(scored);
  res.fpr95 = fpr_at_recall(scored, 0.95);
  res.n_groups = model.groups.size();
  res.bits_per_group = model.groups.empty() ? 0 : model.groups.front().len;
  res.active_groups = w.support_size();
  return res;
}

void extract_to_file(const RunConfig& cfg, const DescriptorModel& model,
                     const std::filesystem::path& data_root, const std::filesystem::path& out) {
  cfg.validate();
  if (!model.finalized()) throw ConfigError("model has no weights; run train-weights first");
  const RawPatchSource src = load_patch_source(data_root);
  const DescriptorExtractor extractor(model);
  const PreprocessParams pp{model.patch_size, model.preprocess.gaussian_kernel,
                            model.preprocess.gaussian_sigma};

  std::ostringstream text;
  text << "# rmgd descriptors config_hash=" << cfg.hash() << " seed=" << cfg.seed
       << " groups=" << model.groups.size() << '\n';
  std::vector<Descriptor> descs(src.patch_count());
  std::vector<std::uint32_t> ids(src.patch_count());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<std::uint32_t>(i);
  parallel_chunks(ids.size(), 64, cfg.threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i)
      descs[i] = extractor.extract(preprocess(src.patch64(i), pp, static_cast<std::int64_t>(i),
                                              src.point_ids[i]));
  });
  for (std::size_t i = 0; i < descs.size(); ++i) {
    text << i;
    for (const std::string& h : descriptor_hex(descs[i], extractor.layout())) text << ' ' << h;
    text << '\n';
  }
  write_text_file(out.string(), text.str());
}

std::string report_table_csv(std::span<const ReportRow> rows) {
  std::ostringstream out;
  out << "train_set,test_set,n_groups,bits_per_group,fpr95\n";
  for (const auto& r : rows)
    out << r.train_set << ',' << r.test_set << ',' << r.n_groups << ',' << r.bits_per_group << ','
        << format_double(r.fpr95) << '\n';
  return out.str();
}

}  // namespace rmgd::pipeline
