#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tfssl/cli/commands.hpp"
#include "tfssl/cli/training.hpp"
#include "tfssl/error.hpp"

namespace fs = std::filesystem;
using namespace tfssl;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;

  cli::RunConfig Resolve() const {
    auto sets = overrides;
    if (seed) sets.push_back("seed=" + std::to_string(*seed));
    auto cfg = cli::ResolveConfig(config, sets);
    std::cerr << "resolved config: " << cli::ToJson(cfg).dump() << '\n';
    return cfg;
  }
};

void AddCommon(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON run configuration");
  cmd->add_option("--seed", c.seed, "global seed (overrides the config)");
  cmd->add_option("--set", c.overrides, "override a config value, e.g. train.max_epochs=50");
}

int Fail(const std::string& category, const std::string& message) {
  std::cerr << "error: " << category << ": " << message << '\n';
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-microphone sound source localization toolkit"};
  app.require_subcommand(1);

  Common sim_c, train_c, eval_c, loc_c;
  std::string sim_out;
  auto* sim = app.add_subcommand("simulate", "render a simulated dataset");
  AddCommon(sim, sim_c);
  sim->add_option("--out", sim_out, "output directory")->required();

  std::string train_manifest, train_out;
  bool resume = false;
  auto* train = app.add_subcommand("train", "train the network on a manifest");
  AddCommon(train, train_c);
  train->add_option("--manifest", train_manifest, "dataset manifest")->required();
  train->add_option("--out", train_out, "checkpoint directory")->required();
  train->add_flag("--resume", resume, "continue from <out>/last.ckpt");

  std::string eval_manifest, eval_split = "test", eval_method = "model", eval_ckpt, eval_out;
  auto* evaluate = app.add_subcommand("evaluate", "score a split with the model or SRP-PHAT");
  AddCommon(evaluate, eval_c);
  evaluate->add_option("--manifest", eval_manifest, "dataset manifest")->required();
  evaluate->add_option("--split", eval_split, "split to score");
  evaluate->add_option("--method", eval_method, "model or srp-phat");
  evaluate->add_option("--checkpoint", eval_ckpt, "training directory or .ckpt file");
  evaluate->add_option("--out", eval_out, "directory for the report file");

  std::string loc_wav, loc_method = "srp-phat", loc_ckpt, loc_out;
  auto* locate = app.add_subcommand("locate", "per-frame DOA of a two-channel WAV");
  AddCommon(locate, loc_c);
  locate->add_option("wav", loc_wav, "2-channel 16 kHz WAV")->required();
  locate->add_option("--method", loc_method, "model or srp-phat");
  locate->add_option("--checkpoint", loc_ckpt, "training directory or .ckpt file");
  locate->add_option("--out", loc_out, "output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return Fail("usage", e.what());
  }

  try {
    if (*sim) {
      const auto cfg = sim_c.Resolve();
      const auto m = cli::CmdSimulate(cfg, sim_out);
      std::cout << "wrote " << m.records.size() << " utterances to "
                << (fs::path(sim_out) / "manifest.jsonl").string() << '\n';
    } else if (*train) {
      const auto cfg = train_c.Resolve();
      const auto m = cli::ReadManifest(train_manifest);
      const auto result = cli::CmdTrain(cfg, m, train_out, resume, [](const cli::EpochLog& e) {
        std::printf("epoch %4d  train %.6f  val %s  lr %.2e  %.1fs\n", e.epoch, e.train_loss,
                    e.val_loss ? std::to_string(*e.val_loss).c_str() : "-", e.lr, e.seconds);
        std::fflush(stdout);
      });
      std::printf("best epoch %d, validation loss %.6f%s\n", result.best_epoch, result.best_val,
                  result.early_stopped ? " (early stop)" : "");
    } else if (*evaluate) {
      const auto cfg = eval_c.Resolve();
      const auto method = cli::ParseMethod(eval_method);
      if (method == cli::Method::kModel && eval_ckpt.empty())
        return Fail("invalid_argument", "--checkpoint is required with --method model");
      const auto m = cli::ReadManifest(eval_manifest);
      const auto report = cli::CmdEvaluate(cfg, m, eval_split, method, eval_ckpt, eval_out);
      std::cout << cli::FormatReport(report, eval_split + " / " + cli::MethodName(method));
    } else if (*locate) {
      const auto cfg = loc_c.Resolve();
      const auto method = cli::ParseMethod(loc_method);
      if (method == cli::Method::kModel && loc_ckpt.empty())
        return Fail("invalid_argument", "--checkpoint is required with --method model");
      const auto lines = cli::CmdLocate(cfg, loc_wav, method, loc_ckpt);
      if (loc_out.empty()) {
        cli::WriteDoaStream(std::cout, lines);
      } else {
        std::ofstream os(loc_out);
        if (!os) return Fail("io", "cannot write " + loc_out);
        cli::WriteDoaStream(os, lines);
      }
    }
  } catch (const Error& e) {
    return Fail(std::string(ErrorKindName(e.kind())), e.what());
  } catch (const std::exception& e) {
    return Fail("internal", e.what());
  }
  return 0;
}
