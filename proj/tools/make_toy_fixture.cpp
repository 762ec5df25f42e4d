// Regenerates the committed toy replay cache: runs the whole pipeline with
// the deterministic scripted evaluator in cached mode, so every evaluator
// request the pipeline will ever make against the toy dataset lands in the
// cache directory. Usage:
//   make_toy_fixture <config.json> [<scratch-out-dir>]
#include <cstdio>
#include <exception>
#include <iostream>
#include <memory>

#include "qualpipe/config.hpp"
#include "qualpipe/gateway.hpp"
#include "qualpipe/pipeline.hpp"

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: make_toy_fixture <config.json> [<out-dir>]\n";
    return 2;
  }
  try {
    qualpipe::RunConfig cfg;
    qualpipe::apply_config_file(cfg, argv[1]);
    if (argc > 2) cfg.out_dir = argv[2];
    cfg.mode = qualpipe::GatewayMode::Cached;
    qualpipe::LlmGateway gateway = qualpipe::make_gateway(
        cfg, std::make_shared<qualpipe::ScriptedEvaluator>());
    qualpipe::run_all(cfg, gateway);
    std::cout << "fixture complete: " << gateway.upstream_calls()
              << " evaluator calls cached under " << cfg.cache_dir.string()
              << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "make_toy_fixture: error: " << e.what() << "\n";
    return 1;
  }
}
