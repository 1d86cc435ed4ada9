#include "svmr/pipeline.hpp"

#include "svmr/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>

namespace svmr {

namespace {

std::vector<Interval> class_intervals(const AnnotatedVideo& video, int class_id) {
  std::vector<Interval> out;
  for (const auto& inst : video.instances)
    if (inst.class_id == class_id) out.push_back({inst.t_start, inst.t_end});
  return out;
}

std::vector<Interval> to_intervals(const std::vector<MomentPrediction>& preds) {
  std::vector<Interval> out;
  out.reserve(preds.size());
  for (const auto& p : preds) out.push_back({p.t_start, p.t_end});
  return out;
}

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

LocalizationEval localization_auc(const Stage2Model& model, const Corpus& corpus, QuerySplit split,
                                  const LocalizationEvalConfig& config, const ReferenceFilter& filter) {
  if (config.max_pairs < 1) config_error("localization_auc: max_pairs must be >= 1");
  std::vector<std::pair<const QueryClip*, const ReferenceVideo*>> pairs;
  for (const QueryClip* q : corpus.queries_in(split))
    for (const auto& r : corpus.references)
      if (r.video.has_class(q->class_id) && (!filter || filter(r))) pairs.emplace_back(q, &r);
  if (pairs.size() > static_cast<std::size_t>(config.max_pairs)) {
    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(config.seed);
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(static_cast<std::size_t>(config.max_pairs));
    std::sort(order.begin(), order.end());
    std::vector<std::pair<const QueryClip*, const ReferenceVideo*>> kept;
    for (std::size_t i : order) kept.push_back(pairs[i]);
    pairs = std::move(kept);
  }

  std::map<const QueryClip*, Matrix> prepared_queries;
  std::map<const ReferenceVideo*, Matrix> prepared_refs;
  std::vector<LocalizationPair> eval;
  eval.reserve(pairs.size());
  for (const auto& [q, r] : pairs) {
    auto qi = prepared_queries.find(q);
    if (qi == prepared_queries.end()) qi = prepared_queries.emplace(q, model.prepare_query(q->features)).first;
    auto ri = prepared_refs.find(r);
    if (ri == prepared_refs.end()) ri = prepared_refs.emplace(r, model.prepare_reference(r->video.features)).first;
    const BMScoreMaps maps = model.forward(qi->second, ri->second);
    auto fused = fuse_scores(1.0, maps, r->video.duration(), r->video.id());
    const auto moments = soft_nms(std::move(fused), config.sigma, config.max_an);
    eval.push_back({to_intervals(moments), class_intervals(r->video, q->class_id)});
  }
  LocalizationEval out;
  out.curve = ar_at_an(eval, config.max_an);
  out.auc = auc(out.curve);
  return out;
}

GalleryIndex embed_gallery(const Stage1Model& model, const Corpus& corpus) {
  std::vector<std::pair<std::string, Matrix>> entries;
  entries.reserve(corpus.references.size());
  for (const auto& r : corpus.references)
    entries.emplace_back(r.video.id(), model.encode_reference(model.prepare_reference(r.video.features)));
  return GalleryIndex::build(entries);
}

QueryResult run_query(const Stage1Model& stage1, const GalleryIndex& index, const Stage2Model& stage2,
                      const Corpus& corpus, const std::string& query_id, const FeatureSequence& query,
                      const QueryConfig& config) {
  if (config.top_videos < 1) config_error("top_videos must be >= 1");
  const Vector e_q = stage1.encode_query(stage1.prepare_query(query));
  const auto hits = index.search(e_q, config.top_videos);
  const Matrix q2 = stage2.prepare_query(query);
  std::vector<CandidateMaps> candidates;
  candidates.reserve(hits.size());
  for (const auto& hit : hits) {
    const ReferenceVideo* ref = corpus.find_reference(hit.video_id);
    if (!ref) data_error("index video " + hit.video_id + " is not in the corpus");
    candidates.push_back({hit.video_id, hit.score, ref->video.duration(),
                          stage2.forward(q2, stage2.prepare_reference(ref->video.features))});
  }
  return assemble_results(query_id, candidates, config.post);
}

std::vector<QueryResult> run_queries(const Stage1Model& stage1, const GalleryIndex& index, const Stage2Model& stage2,
                                     const Corpus& corpus, QuerySplit split, const QueryConfig& config) {
  std::vector<QueryResult> out;
  for (const QueryClip* q : corpus.queries_in(split))
    out.push_back(run_query(stage1, index, stage2, corpus, q->id, q->features, config));
  return out;
}

std::vector<QueryResult> read_results(const std::filesystem::path& predictions,
                                      const std::filesystem::path& candidates) {
  std::vector<QueryResult> out;
  std::map<std::string, std::size_t> slot;
  auto result_for = [&](const std::string& qid) -> QueryResult& {
    auto it = slot.find(qid);
    if (it == slot.end()) {
      it = slot.emplace(qid, out.size()).first;
      out.push_back({qid, {}, {}});
    }
    return out[it->second];
  };

  std::ifstream in(candidates);
  if (!in) data_error("cannot open candidates file " + candidates.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      result_for(j.at("query_id").get<std::string>())
          .per_video.push_back({j.at("video_id").get<std::string>(), j.at("similarity").get<double>(), {}});
    } catch (const nlohmann::json::exception& e) {
      data_error(candidates.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }

  for (auto& rec : read_predictions(predictions)) {
    QueryResult& r = result_for(rec.query_id);
    auto vm = std::find_if(r.per_video.begin(), r.per_video.end(),
                           [&](const VideoMoments& v) { return v.video_id == rec.prediction.video_id; });
    if (vm == r.per_video.end())
      data_error("prediction for " + rec.query_id + " names video " + rec.prediction.video_id +
                 " absent from its candidates");
    vm->moments.push_back(rec.prediction);
    r.ranked.push_back(rec.prediction);
  }
  for (auto& r : out) {
    std::stable_sort(r.ranked.begin(), r.ranked.end(), prediction_before);
    for (auto& vm : r.per_video) std::stable_sort(vm.moments.begin(), vm.moments.end(), prediction_before);
  }
  return out;
}

double EvaluationReport::get(const std::string& name) const {
  for (const auto& [k, v] : metrics)
    if (k == name) return v;
  data_error("report has no metric " + name);
}

std::string EvaluationReport::to_text() const {
  std::string out;
  for (const auto& [k, v] : metrics) out += k + " = " + fmt6(v) + "\n";
  return out;
}

std::string EvaluationReport::curve_csv() const {
  std::string out = "an,ar\n";
  for (std::size_t i = 0; i < curve.recall.size(); ++i) out += std::to_string(i + 1) + "," + fmt6(curve.recall[i]) + "\n";
  return out;
}

EvaluationReport evaluate_results(const Corpus& corpus, const std::vector<QueryResult>& results, double tiou_tau) {
  std::vector<std::vector<std::string>> rankings;
  std::vector<std::set<std::string>> relevant;
  std::vector<LocalizationPair> pairs;
  std::vector<std::vector<RankedClip>> ranked, truth;
  for (const auto& r : results) {
    const QueryClip* q = corpus.find_query(r.query_id);
    if (!q) data_error("unknown query id " + r.query_id);
    std::vector<std::string> ids;
    for (const auto& vm : r.per_video) {
      ids.push_back(vm.video_id);
      const ReferenceVideo* ref = corpus.find_reference(vm.video_id);
      if (!ref) data_error("unknown reference video " + vm.video_id);
      pairs.push_back({to_intervals(vm.moments), class_intervals(ref->video, q->class_id)});
    }
    rankings.push_back(std::move(ids));
    std::set<std::string> rel;
    std::vector<RankedClip> gt;
    for (const auto& ref : corpus.references)
      if (ref.video.has_class(q->class_id)) {
        rel.insert(ref.video.id());
        for (const auto& iv : class_intervals(ref.video, q->class_id)) gt.push_back({ref.video.id(), iv});
      }
    relevant.push_back(std::move(rel));
    truth.push_back(std::move(gt));
    std::vector<RankedClip> clips;
    for (const auto& p : r.ranked) clips.push_back({p.video_id, {p.t_start, p.t_end}});
    ranked.push_back(std::move(clips));
  }

  EvaluationReport rep;
  rep.metrics.emplace_back("queries", static_cast<double>(results.size()));
  for (std::size_t k : {1, 5, 10}) rep.metrics.emplace_back("HR@" + std::to_string(k), hr_at_k(rankings, relevant, k).value);
  for (std::size_t k : {1, 5, 10})
    rep.metrics.emplace_back("mAP@" + std::to_string(k), map_at_k(rankings, relevant, k).value);
  rep.curve = ar_at_an(pairs, 100);
  for (std::size_t an : {1, 10, 100}) rep.metrics.emplace_back("AR@" + std::to_string(an), rep.curve.recall[an - 1]);
  rep.metrics.emplace_back("AUC", auc(rep.curve));
  rep.metrics.emplace_back("localization_pairs", static_cast<double>(rep.curve.pairs));
  rep.metrics.emplace_back("localization_pairs_excluded", static_cast<double>(rep.curve.excluded));
  for (std::size_t n : {1, 5}) {
    const auto pr = prec_at_n(ranked, truth, n, tiou_tau);
    rep.metrics.emplace_back("Prec@" + std::to_string(n), pr.value);
    rep.metrics.emplace_back("Prec@" + std::to_string(n) + "_short_lists", static_cast<double>(pr.short_lists));
  }
  return rep;
}

RetrievalReport evaluate_retrieval(const Stage1Model& model, const GalleryIndex& index, const Corpus& corpus,
                                   QuerySplit split, const std::vector<std::size_t>& ks) {
  if (ks.empty()) config_error("evaluate_retrieval: no cutoffs");
  const std::size_t kmax = *std::max_element(ks.begin(), ks.end());
  std::vector<std::vector<std::string>> rankings;
  std::vector<std::set<std::string>> relevant;
  for (const QueryClip* q : corpus.queries_in(split)) {
    std::vector<std::string> ids;
    for (const auto& h : index.search(model.encode_query(model.prepare_query(q->features)), kmax))
      ids.push_back(h.video_id);
    rankings.push_back(std::move(ids));
    std::set<std::string> rel;
    for (const auto& r : corpus.references)
      if (r.video.has_class(q->class_id)) rel.insert(r.video.id());
    relevant.push_back(std::move(rel));
  }
  RetrievalReport rep;
  for (std::size_t k : ks) {
    const auto hr = hr_at_k(rankings, relevant, k);
    rep.hr.emplace_back(k, hr.value);
    rep.map.emplace_back(k, map_at_k(rankings, relevant, k).value);
    rep.queries = hr.evaluated;
    rep.excluded = hr.excluded;
  }
  return rep;
}

}  // namespace svmr
