// depsev: command-line front end for the labeling and classification pipeline.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "depsev/annotation_store.hpp"
#include "depsev/evaluation.hpp"
#include "depsev/pipeline.hpp"
#include "depsev/service.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace depsev;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kFlagged = 1, kFailure = 2, kPending = 3 };

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool serial = false;
};

PipelineConfig load(const Globals& g) {
  if (g.config.empty()) throw Error(ErrorKind::Config, "--config is required");
  ConfigOverrides o;
  o.seed = g.seed;
  if (g.out) o.output_dir = fs::absolute(*g.out);
  return load_config(g.config, o);
}

RunOptions options(const Globals& g) {
  return {stderr_warnings(), g.serial ? Execution::Serial : Execution::Parallel};
}

void print(const json& j) { std::cout << j.dump(2) << '\n'; }

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> languages_with(const PipelineConfig& c, const char* artifact) {
  std::vector<std::string> out;
  for (const auto& [lang, lc] : c.languages) {
    if (fs::exists(stages::language_dir(c, lang) / artifact)) out.push_back(lang);
  }
  if (out.empty()) {
    throw Error(ErrorKind::NotFound, std::string("no language has ") + artifact +
                                         " yet; run the earlier stages first");
  }
  return out;
}

int pending_exit(std::size_t n) {
  std::cerr << "pending: " << n << '\n';
  return kPending;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Depression-severity labeling and classification pipeline"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Pipeline config (JSON)");
  app.add_option("--seed", g.seed, "Replace every configured seed");
  app.add_option("--out", g.out, "Output directory");
  app.add_flag("--serial", g.serial, "Disable OpenMP kernels");

  std::string import_file;
  std::string report_check;
  double report_tolerance = 0.02;
  std::vector<std::string> report_files;
  std::string host = "127.0.0.1";
  std::optional<int> port;

  auto* ingest = app.add_subcommand("ingest", "Read and preprocess the corpus");
  auto* lexicon = app.add_subcommand("lexicon", "Build keyword lexicons");
  auto* label_kw = app.add_subcommand("label-keyword", "Keyword votes");
  auto* label_zs = app.add_subcommand("label-zeroshot", "Zero-shot votes");
  auto* annotate = app.add_subcommand("annotate-import", "Import expert labels into the store");
  annotate->add_option("file", import_file, "CSV: doc_id,annotator_id,label,submitted_at")
      ->required();
  auto* fuse = app.add_subcommand("fuse", "Fuse keyword, zero-shot and expert votes");
  auto* split = app.add_subcommand("split", "Stratified train/validation/test split");
  auto* smote = app.add_subcommand("smote", "TF-IDF features and SMOTE balancing");
  auto* train = app.add_subcommand("train", "Train the configured models");
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate models on validation and test");
  auto* report = app.add_subcommand("report", "Render machine reports or check published rows");
  report->add_option("files", report_files, "Machine report files (.jsonl)");
  report->add_option("--check", report_check, "Rows file: 'label precision recall f1' per line");
  report->add_option("--tolerance", report_tolerance, "F1 tolerance for --check");
  auto* run = app.add_subcommand("run", "Full pipeline");
  auto* serve_cmd = app.add_subcommand("serve", "Annotation HTTP service");
  serve_cmd->add_option("--host", host, "Bind address");
  serve_cmd->add_option("--port", port, "Port (0 picks a free one)");

  CLI11_PARSE(app, argc, argv);
  const std::string stage = app.get_subcommands().front()->get_name();

  try {
    if (report->parsed()) {
      if (!report_check.empty()) {
        const auto rows = parse_published_rows(read_file(report_check));
        const auto flags = validate_report_consistency(rows, report_tolerance);
        for (const auto& f : flags) {
          std::printf("flagged row %zu %s: P=%.2f R=%.2f F1=%.2f, consistent F1 in [%.4f, %.4f]\n",
                      f.row + 1, f.label.c_str(), rows[f.row].precision, rows[f.row].recall,
                      rows[f.row].f1, f.f1_min, f.f1_max);
        }
        std::printf("%zu/%zu rows consistent at tolerance %.3f\n", rows.size() - flags.size(),
                    rows.size(), report_tolerance);
        return flags.empty() ? kOk : kFlagged;
      }
      if (report_files.empty()) {
        const auto c = load(g);
        for (const auto& lang : languages_with(c, "report_test.jsonl")) {
          for (const char* s : {"validation", "test"}) {
            const auto p = stages::language_dir(c, lang) / (std::string("report_") + s + ".jsonl");
            if (fs::exists(p)) report_files.push_back(p.string());
          }
        }
      }
      for (const auto& f : report_files) {
        const auto reports = parse_machine_report(read_file(f));
        std::cout << "== " << f << '\n' << render_report(reports, ReportFormat::Text) << '\n';
      }
      return kOk;
    }

    const auto c = load(g);
    const auto opt = options(g);

    if (ingest->parsed()) {
      const auto docs = stages::ingest(c, opt);
      std::size_t empty = 0;
      for (const auto& d : docs) empty += d.token_count == 0;
      print({{"documents", docs.size()},
             {"empty", empty},
             {"output", (c.output_dir / "clean.jsonl").string()}});
    } else if (lexicon->parsed()) {
      json j = json::object();
      for (const auto& [lang, lex] : stages::lexicons(c, opt)) j[lang] = lex.entries().size();
      print({{"entries", j}});
    } else if (label_kw->parsed()) {
      const auto docs = stages::load_ingested(c);
      const auto votes = stages::label_keyword(c, docs, stages::lexicons(c, opt), opt);
      print({{"votes", votes.size()},
             {"output", (c.output_dir / "votes_keyword.jsonl").string()}});
    } else if (label_zs->parsed()) {
      const auto docs = stages::load_ingested(c);
      const auto votes = stages::label_zeroshot(c, docs);
      print({{"votes", votes.size()},
             {"output", (c.output_dir / "votes_zeroshot.jsonl").string()}});
    } else if (annotate->parsed()) {
      if (!c.annotation_store) {
        throw Error(ErrorKind::Config, "config has no annotation_store directory");
      }
      const auto docs = stages::load_ingested(c);
      std::unordered_set<std::string> ids;
      for (const auto& d : docs) ids.insert(d.id);
      AnnotationStore store(*c.annotation_store, ids);
      std::size_t stored = 0, duplicates = 0;
      for (const auto& a : read_expert_labels(import_file)) {
        const auto ack = record_expert_label(a, store);
        ack.duplicate ? ++duplicates : ++stored;
      }
      print({{"stored", stored}, {"duplicates", duplicates}, {"labeled", store.labeled_count()}});
    } else if (fuse->parsed()) {
      const auto docs = stages::load_ingested(c);
      const auto expert = stages::expert_labels(c, docs);
      const auto pending = stages::pending_ids(docs, expert);
      if (!pending.empty()) return pending_exit(pending.size());
      const auto fused = stages::fuse(c, docs, read_votes(c.output_dir / "votes_keyword.jsonl"),
                                      read_votes(c.output_dir / "votes_zeroshot.jsonl"), expert);
      std::map<std::string, std::size_t> counts;
      for (const auto& f : fused) ++counts[std::string(to_string(f.agreement))];
      print({{"fused", fused.size()}, {"agreement", counts}});
    } else if (split->parsed()) {
      const auto docs = stages::load_ingested(c);
      const auto coarse = stages::coarse_labels(stages::load_fused(c), c.merge);
      json j = json::object();
      for (const auto& [lang, s] : stages::split(c, docs, coarse)) {
        j[lang] = {{"train", s.train.size()},
                   {"validation", s.validation.size()},
                   {"test", s.test.size()}};
      }
      print(j);
    } else if (smote->parsed()) {
      json j = json::object();
      for (const auto& lang : languages_with(c, "dataset/train.jsonl")) {
        const auto f = stages::smote(c, lang, opt);
        j[lang] = {{"vocabulary_size", f.tfidf.vocabulary_size()},
                   {"before", f.original.size()},
                   {"after", f.balanced.size()}};
      }
      print(j);
    } else if (train->parsed()) {
      json j = json::object();
      for (const auto& lang : languages_with(c, "train_vectors.jsonl")) {
        json models = json::array();
        for (const auto& m : stages::train(c, lang, opt)) {
          models.push_back(std::string(to_string(m.kind())));
        }
        j[lang] = models;
      }
      print(j);
    } else if (evaluate->parsed()) {
      json j = json::object();
      for (const auto& lang : languages_with(c, "models")) {
        for (const auto& [split_name, rs] : stages::evaluate(c, lang, opt)) {
          for (const auto& r : rs) j[lang][split_name][r.model] = r.accuracy;
        }
      }
      print({{"accuracy", j}});
    } else if (run->parsed()) {
      const auto result = run_pipeline(c, opt);
      if (!result.completed) return pending_exit(result.pending);
      print({{"status", "completed"},
             {"config_hash", result.manifest["config_hash"]},
             {"manifest", (c.output_dir / "manifest.json").string()}});
    } else if (serve_cmd->parsed()) {
      auto sc = c;
      if (port) sc.port = *port;
      serve(sc, host);
    }
    return kOk;
  } catch (const PipelineError& e) {
    std::cerr << e.to_json().dump() << '\n';
  } catch (const Error& e) {
    std::cerr << PipelineError(stage, e.kind(), e.what()).to_json().dump() << '\n';
  } catch (const std::exception& e) {
    std::cerr << json{{"stage", stage}, {"kind", "internal"}, {"message", e.what()}}.dump()
              << '\n';
  }
  return kFailure;
}
