// svmr: corpus construction, training, indexing, querying and evaluation.

#include "svmr/benchmark.hpp"
#include "svmr/checkpoint.hpp"
#include "svmr/config.hpp"
#include "svmr/error.hpp"
#include "svmr/gallery.hpp"
#include "svmr/grad_suite.hpp"
#include "svmr/pipeline.hpp"
#include "svmr/stage1.hpp"
#include "svmr/stage2.hpp"

#include <CLI11.hpp>

#ifdef __GLIBC__
#include <malloc.h>
#endif
#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace svmr;

namespace {

inline constexpr const char* kStage1Magic = "SVMR1";
inline constexpr const char* kStage2Magic = "SVMR2";

struct Common {
  std::string config_path;
  std::uint64_t seed = 0;
  std::vector<std::string> overrides;
  std::string out_dir = ".";
};

std::set<std::string> known_keys() {
  KeyValueConfig kv;
  Stage1Config{}.write(kv);
  Stage1TrainConfig{}.write(kv);
  Stage2Config{}.write(kv);
  Stage2TrainConfig{}.write(kv);
  SynthConfig{}.write(kv);
  SynthSizes{}.write(kv);
  std::set<std::string> keys;
  for (const auto& [k, v] : kv.values()) keys.insert(k);
  for (const char* k : {"corpus.val_fraction", "corpus.test_fraction", "eval.max_pairs", "query.split",
                        "query.per_video_top_k", "query.prune_threshold"})
    keys.insert(k);
  return keys;
}

KeyValueConfig load_config(const Common& c) {
  KeyValueConfig kv = c.config_path.empty() ? KeyValueConfig{} : KeyValueConfig::load(c.config_path);
  for (const auto& o : c.overrides) kv.apply_override(o);
  kv.require_known(known_keys());
  return kv;
}

// Appends to <out-dir>/svmr.log and echoes to stderr.
class Log {
 public:
  Log(const Common& c, const std::string& command, const KeyValueConfig& kv) {
    fs::create_directories(c.out_dir);
    out_.open(fs::path(c.out_dir) / "svmr.log", std::ios::app);
    line(command + " config_hash=" + hex64(kv.hash()) + " seed=" + std::to_string(c.seed));
  }
  void line(const std::string& s) {
    std::cerr << s << "\n";
    out_ << s << "\n";
    out_.flush();
  }

 private:
  std::ofstream out_;
};

// Exclusive lock on "<dir>/.svmr.lock" held while a file in dir is replaced.
class FileLock {
 public:
  explicit FileLock(const fs::path& target) {
    const std::string lock = (target.parent_path() / ".svmr.lock").string();
    fd_ = ::open(lock.c_str(), O_CREAT | O_RDWR, 0644);
    if (fd_ < 0 || ::flock(fd_, LOCK_EX) != 0) data_error("cannot lock " + lock);
  }
  ~FileLock() {
    if (fd_ >= 0) {
      ::flock(fd_, LOCK_UN);
      ::close(fd_);
    }
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_ = -1;
};

void locked_write(const fs::path& path, const std::string& bytes) {
  FileLock lock(path);
  const fs::path tmp = path.string() + ".tmp";
  write_file_bytes(tmp, bytes);
  fs::rename(tmp, path);
}

void write_text(const fs::path& path, const std::string& text) { locked_write(path, text); }

void save_model(const fs::path& path, const char* magic, const ParamSet& params, const KeyValueConfig& cfg) {
  locked_write(path, encode_checkpoint(magic, params));
  locked_write(path.string() + ".cfg", cfg.to_text());
}

// The side file belongs to the checkpoint, so a missing one is a data error.
KeyValueConfig load_sidecar(const fs::path& checkpoint) {
  const std::string side = checkpoint.string() + ".cfg";
  return KeyValueConfig::parse(read_file_bytes(side), side);
}

Stage1Model load_stage1(const fs::path& path) {
  const auto cfg = load_sidecar(path);
  return Stage1Model(Stage1Config::read(cfg), load_checkpoint(path, kStage1Magic));
}

Stage2Model load_stage2(const fs::path& path) {
  const auto cfg = load_sidecar(path);
  return Stage2Model(Stage2Config::read(cfg), load_checkpoint(path, kStage2Magic));
}

QuerySplit parse_split(const std::string& s) {
  if (s == "train") return QuerySplit::Train;
  if (s == "val") return QuerySplit::Val;
  if (s == "test") return QuerySplit::Test;
  config_error("unknown split '" + s + "' (expected train, val or test)");
}

ClassSplit class_split_for(const std::vector<AnnotatedVideo>& videos, const KeyValueConfig& kv) {
  std::set<int> classes;
  for (const auto& v : videos)
    for (int c : v.classes()) classes.insert(c);
  return ClassSplit::from_proportions({classes.begin(), classes.end()}, kv.get_double("corpus.val_fraction", 0.1),
                                      kv.get_double("corpus.test_fraction", 0.1));
}

void report_corpus(Log& log, const Corpus& corpus, const fs::path& dir) {
  for (const auto& w : corpus.warnings) log.line("warning " + w.video_id + ": " + w.message);
  log.line("corpus " + dir.string() + " queries=" + std::to_string(corpus.queries.size()) +
           " references=" + std::to_string(corpus.references.size()));
}

int cmd_synth_corpus(const Common& c) {
  const auto kv = load_config(c);
  Log log(c, "synth-corpus", kv);
  SynthConfig sc = SynthConfig::read(kv);
  sc.seed = c.seed;
  const SynthCorpus syn = synth_generate(sc, SynthSizes::read(kv));
  std::mt19937_64 rng(c.seed);
  const Corpus corpus = build_corpus(syn.v1, syn.v2, class_split_for(syn.v1, kv), rng);
  const fs::path dir = fs::path(c.out_dir) / "corpus";
  write_corpus(corpus, dir);
  report_corpus(log, corpus, dir);
  return 0;
}

int cmd_build_corpus(const Common& c, const std::string& annotations) {
  const auto kv = load_config(c);
  Log log(c, "build-corpus", kv);
  std::mt19937_64 rng(c.seed);
  auto videos = load_annotated_videos(annotations);
  const ClassSplit split = class_split_for(videos, kv);
  auto [v1, v2] = split_halves(std::move(videos), rng);
  const Corpus corpus = build_corpus(v1, v2, split, rng);
  const fs::path dir = fs::path(c.out_dir) / "corpus";
  write_corpus(corpus, dir);
  report_corpus(log, corpus, dir);
  return 0;
}

int cmd_train_stage1(const Common& c, const std::string& corpus_dir) {
  const auto kv = load_config(c);
  Log log(c, "train-stage1", kv);
  const Stage1Config config = Stage1Config::read(kv);
  Stage1TrainConfig train = Stage1TrainConfig::read(kv);
  const Corpus corpus = read_corpus(corpus_dir);
  train.seed = c.seed;
  const auto result = train_stage1(corpus, config, train);
  for (const auto& w : result.warnings) log.line("warning " + w.video_id + ": " + w.message);
  std::ostringstream losses;
  losses << "epoch,train_loss,val_loss\n";
  for (const auto& h : result.history) {
    losses << h.epoch << "," << h.train_loss << "," << h.val_metric << "\n";
    log.line("epoch " + std::to_string(h.epoch) + " train_loss=" + std::to_string(h.train_loss) +
             " val_loss=" + std::to_string(h.val_metric));
  }
  KeyValueConfig cfg;
  config.write(cfg);
  const fs::path out = fs::path(c.out_dir) / "stage1.ckpt";
  save_model(out, kStage1Magic, result.model.params(), cfg);
  write_text(fs::path(c.out_dir) / "stage1_loss.csv", losses.str());
  log.line("best_epoch=" + std::to_string(result.best_epoch) + " checkpoint=" + out.string());
  return 0;
}

int cmd_embed_gallery(const Common& c, const std::string& corpus_dir, const std::string& checkpoint) {
  const auto kv = load_config(c);
  Log log(c, "embed-gallery", kv);
  const Corpus corpus = read_corpus(corpus_dir);
  const GalleryIndex index = embed_gallery(load_stage1(checkpoint), corpus);
  const fs::path out = fs::path(c.out_dir) / "gallery.idx";
  locked_write(out, index.encode());
  log.line("index " + out.string() + " entries=" + std::to_string(index.size()));
  return 0;
}

int cmd_train_stage2(const Common& c, const std::string& corpus_dir, double sigma) {
  const auto kv = load_config(c);
  Log log(c, "train-stage2", kv);
  const Stage2Config config = Stage2Config::read(kv);
  Stage2TrainConfig train = Stage2TrainConfig::read(kv);
  const Corpus corpus = read_corpus(corpus_dir);
  train.seed = c.seed;
  train.soft_nms_sigma = sigma;
  const auto result = train_stage2(corpus, config, train);
  for (const auto& w : result.warnings) log.line("warning " + w.video_id + ": " + w.message);
  std::ostringstream losses;
  losses << "epoch,train_loss,val_auc\n";
  for (const auto& [epoch, v] : result.history) {
    losses << epoch << "," << v.first << "," << v.second << "\n";
    log.line("epoch " + std::to_string(epoch) + " train_loss=" + std::to_string(v.first) +
             " val_auc=" + std::to_string(v.second));
  }
  KeyValueConfig cfg;
  config.write(cfg);
  const fs::path out = fs::path(c.out_dir) / "stage2.ckpt";
  save_model(out, kStage2Magic, result.model.params(), cfg);
  write_text(fs::path(c.out_dir) / "stage2_loss.csv", losses.str());
  log.line("best_epoch=" + std::to_string(result.best_epoch) + " checkpoint=" + out.string());
  return 0;
}

struct QueryArgs {
  std::string corpus, stage1, stage2, index, query_file, query_id, split;
  std::size_t top_videos = 10;
  double sigma = 0.4;
};

int cmd_query(const Common& c, const QueryArgs& a) {
  const auto kv = load_config(c);
  Log log(c, "query", kv);
  if (a.top_videos == 0) config_error("--top-videos must be >= 1");
  QueryConfig qc;
  qc.top_videos = a.top_videos;
  qc.post.soft_nms_sigma = a.sigma;
  qc.post.per_video_top_k = static_cast<std::size_t>(kv.get_int("query.per_video_top_k", 100));
  qc.post.prune_threshold = kv.get_double("query.prune_threshold", qc.post.prune_threshold);
  if (!(qc.post.soft_nms_sigma > 0)) config_error("--soft-nms-sigma must be > 0");
  const QuerySplit split = parse_split(a.split.empty() ? kv.get_string("query.split", "test") : a.split);
  const Corpus corpus = read_corpus(a.corpus);
  const Stage1Model s1 = load_stage1(a.stage1);
  const Stage2Model s2 = load_stage2(a.stage2);
  const GalleryIndex index = GalleryIndex::load(a.index);

  std::vector<QueryResult> results;
  if (!a.query_file.empty()) {
    const FeatureSequence seq = load_features(a.query_file);
    const std::string id = a.query_id.empty() ? fs::path(a.query_file).stem().string() : a.query_id;
    results.push_back(run_query(s1, index, s2, corpus, id, seq, qc));
  } else {
    results = run_queries(s1, index, s2, corpus, split, qc);
  }
  const fs::path pred = fs::path(c.out_dir) / "predictions.jsonl";
  const fs::path cand = fs::path(c.out_dir) / "candidates.jsonl";
  write_predictions(results, pred);
  write_text(cand, format_candidates(results));
  log.line("queries=" + std::to_string(results.size()) + " predictions=" + pred.string() +
           " candidates=" + cand.string());
  return 0;
}

int cmd_evaluate(const Common& c, const std::string& corpus_dir, const std::string& predictions,
                 const std::string& candidates, double tau) {
  const auto kv = load_config(c);
  Log log(c, "evaluate", kv);
  if (!(tau > 0 && tau <= 1)) config_error("--tiou-tau must be in (0, 1]");
  const Corpus corpus = read_corpus(corpus_dir);
  const auto results = read_results(predictions, candidates);
  const EvaluationReport report = evaluate_results(corpus, results, tau);
  write_text(fs::path(c.out_dir) / "report.txt", report.to_text());
  write_text(fs::path(c.out_dir) / "ar_curve.csv", report.curve_csv());
  std::cout << report.to_text();
  return 0;
}

int cmd_gradcheck(const Common& c, int seeds) {
  const auto kv = load_config(c);
  Log log(c, "gradcheck", kv);
  std::vector<std::uint64_t> s;
  for (int i = 0; i < seeds; ++i) s.push_back(c.seed + static_cast<std::uint64_t>(i));
  bool ok = true;
  for (const auto& e : nn::run_grad_suite(s)) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s %s seed=%llu max_rel_error=%.3e tol=%.0e block=%s", e.passed() ? "ok" : "FAIL",
                  e.name.c_str(), static_cast<unsigned long long>(e.seed), e.max_rel_error, e.tolerance,
                  e.worst_block.c_str());
    std::cout << buf << "\n";
    ok = ok && e.passed();
  }
  if (!ok) numeric_error("gradient check failed");
  return 0;
}

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Config: return 2;
    case ErrorKind::Data: return 3;
    case ErrorKind::Numeric: return 4;
  }
  return 1;
}

void print_error(int code, const char* kind, const std::string& message) {
  std::string m = message;
  for (char& ch : m)
    if (ch == '\n') ch = ' ';
  std::cerr << "svmr: error code=" << code << " kind=" << kind << " message=" << m << "\n";
}

}  // namespace

int main(int argc, char** argv) {
#ifdef __GLIBC__
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
  CLI::App app{"Two-stage video moment retrieval"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "Key-value config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", common.seed, "Seed for all randomness");
    sub->add_option("--set", common.overrides, "Config override key=value (repeatable)");
    sub->add_option("--out-dir", common.out_dir, "Output directory");
  };

  std::string corpus, annotations, checkpoint, predictions, candidates;
  double tau = 0.5, sigma = 0.4;
  int seeds = 5;
  QueryArgs q;

  auto* synth = app.add_subcommand("synth-corpus", "Generate a synthetic corpus");
  add_common(synth);
  auto* build = app.add_subcommand("build-corpus", "Build a corpus from an annotation manifest");
  add_common(build);
  build->add_option("--annotations", annotations, "Annotation JSON lines file")->required();
  auto* t1 = app.add_subcommand("train-stage1", "Train the retrieval model");
  add_common(t1);
  t1->add_option("--corpus", corpus, "Corpus directory")->required();
  auto* emb = app.add_subcommand("embed-gallery", "Embed every reference video");
  add_common(emb);
  emb->add_option("--corpus", corpus, "Corpus directory")->required();
  emb->add_option("--checkpoint", checkpoint, "Stage-1 checkpoint")->required();
  auto* t2 = app.add_subcommand("train-stage2", "Train the re-localization model");
  add_common(t2);
  t2->add_option("--corpus", corpus, "Corpus directory")->required();
  t2->add_option("--soft-nms-sigma", sigma, "Soft-NMS sigma used for validation");
  auto* qry = app.add_subcommand("query", "Retrieve videos and localize moments");
  add_common(qry);
  qry->add_option("--corpus", q.corpus, "Corpus directory")->required();
  qry->add_option("--stage1", q.stage1, "Stage-1 checkpoint")->required();
  qry->add_option("--stage2", q.stage2, "Stage-2 checkpoint")->required();
  qry->add_option("--index", q.index, "Gallery index")->required();
  qry->add_option("--query-file", q.query_file, "Query feature file (SVMF)");
  qry->add_option("--query-id", q.query_id, "Query id for --query-file");
  qry->add_option("--split", q.split, "Query split to run: train, val or test");
  qry->add_option("--top-videos", q.top_videos, "Candidate videos from stage 1");
  qry->add_option("--soft-nms-sigma", q.sigma, "Soft-NMS sigma");
  auto* ev = app.add_subcommand("evaluate", "Score predictions against ground truth");
  add_common(ev);
  ev->add_option("--corpus", corpus, "Corpus directory")->required();
  ev->add_option("--predictions", predictions, "predictions.jsonl")->required();
  ev->add_option("--candidates", candidates, "candidates.jsonl")->required();
  ev->add_option("--tiou-tau", tau, "tIoU threshold for Prec@N");
  auto* gc = app.add_subcommand("gradcheck", "Run the finite-difference gradient suite");
  add_common(gc);
  gc->add_option("--seeds", seeds, "Number of seeds starting at --seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error(2, "usage", e.what());
    return 2;
  }

  try {
    if (*synth) return cmd_synth_corpus(common);
    if (*build) return cmd_build_corpus(common, annotations);
    if (*t1) return cmd_train_stage1(common, corpus);
    if (*emb) return cmd_embed_gallery(common, corpus, checkpoint);
    if (*t2) return cmd_train_stage2(common, corpus, sigma);
    if (*qry) return cmd_query(common, q);
    if (*ev) return cmd_evaluate(common, corpus, predictions, candidates, tau);
    if (*gc) return cmd_gradcheck(common, seeds);
  } catch (const Error& e) {
    const int code = exit_code(e.kind());
    print_error(code, error_kind_name(e.kind()), e.what());
    return code;
  } catch (const fs::filesystem_error& e) {
    print_error(3, "data", e.what());
    return 3;
  } catch (const std::exception& e) {
    print_error(1, "internal", e.what());
    return 1;
  }
  return 0;
}
