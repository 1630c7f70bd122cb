#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "topowarp/config.hpp"
#include "topowarp/icp.hpp"

using namespace topowarp;

TEST_CASE("empty text yields the defaults") {
  const RunConfig cfg = parse_config("");
  const RunConfig def;
  CHECK(cfg.pipeline.icp.bin_size == def.pipeline.icp.bin_size);
  CHECK(cfg.pipeline.icp.conv_trans == def.pipeline.icp.conv_trans);
  CHECK(cfg.pipeline.icp.objective.lambda_stiff == def.pipeline.icp.objective.lambda_stiff);
  CHECK(cfg.pipeline.topology.tau == def.pipeline.topology.tau);
  CHECK(cfg.depth_cutoff == def.depth_cutoff);
  CHECK(cfg.pipeline.icp.mode == CorrespondenceMode::NearestNeighbor);
}

TEST_CASE("serialization round-trips every key") {
  RunConfig cfg;
  cfg.pipeline.icp.bin_size = 0.0375;
  cfg.pipeline.icp.interp_k = 6;
  cfg.pipeline.icp.objective.lambda_point = 3.25;
  cfg.pipeline.icp.objective.pure_gn = true;
  cfg.pipeline.icp.mode = CorrespondenceMode::Projective;
  cfg.pipeline.icp.conv_trans = 0.00123;
  cfg.pipeline.topology.alpha = 2.75;
  cfg.pipeline.topology.blend_use_clustered = true;
  cfg.normals.k = 17;
  cfg.dz_occ = 0.025;
  cfg.event_dt_max = 4;

  const std::string text = config_to_text(cfg);
  const RunConfig back = parse_config(text);
  CHECK(config_to_text(back) == text);
  CHECK(back.pipeline.icp.bin_size == cfg.pipeline.icp.bin_size);
  CHECK(back.pipeline.icp.conv_trans == cfg.pipeline.icp.conv_trans);
  CHECK(back.pipeline.icp.mode == CorrespondenceMode::Projective);
  CHECK(back.pipeline.topology.alpha == 2.75);
  CHECK(back.normals.k == 17);
}

TEST_CASE("bin_size derives the translation convergence threshold") {
  const RunConfig derived = parse_config("bin_size = 0.05\n");
  CHECK(derived.pipeline.icp.bin_size == 0.05);
  CHECK(derived.pipeline.icp.conv_trans == 0.05 / 25.0);

  // An explicit conv_trans wins no matter where it appears.
  const RunConfig before = parse_config("conv_trans = 0.01\nbin_size = 0.05\n");
  CHECK(before.pipeline.icp.conv_trans == 0.01);
  const RunConfig after = parse_config("bin_size = 0.05\nconv_trans = 0.01\n");
  CHECK(after.pipeline.icp.conv_trans == 0.01);
}

TEST_CASE("comments and whitespace are tolerated") {
  const RunConfig cfg = parse_config(
      "# a full-line comment\n"
      "\n"
      "   \t \n"
      "tau = 2.5   # trailing comment\n"
      "  alpha =   1.25\n");
  CHECK(cfg.pipeline.topology.tau == 2.5);
  CHECK(cfg.pipeline.topology.alpha == 1.25);
}

TEST_CASE("bad input is reported precisely") {
  CHECK_THROWS_WITH(parse_config("does_not_exist = 1\n"),
                    "unknown config key: does_not_exist");
  CHECK_THROWS_WITH(parse_config("tau = fast\n"), "invalid value for tau: 'fast'");
  CHECK_THROWS_WITH(parse_config("tau = 2.2x\n"), "invalid value for tau: '2.2x'");
  CHECK_THROWS_WITH(parse_config("tau 2.2\n"), "malformed config line 1: 'tau 2.2'");
  CHECK_THROWS_WITH(parse_config("\n\ntau =\n"), "malformed config line 3: 'tau ='");
  CHECK_THROWS_WITH(parse_config("mode = sideways\n"), "invalid value for mode: 'sideways'");
}

TEST_CASE("values are range-checked") {
  CHECK_THROWS_WITH(parse_config("bin_size = 0\n"), "invalid value for bin_size: '0'");
  CHECK_THROWS_WITH(parse_config("bin_size = -0.1\n"), "invalid value for bin_size: '-0.1'");
  CHECK_THROWS_WITH(parse_config("interp_k = 0\n"), "invalid value for interp_k: '0'");
  CHECK_THROWS_WITH(parse_config("alpha = 0.9\n"), "invalid value for alpha: '0.9'");
  CHECK_NOTHROW(parse_config("alpha = 1\n"));  // dominance ratio of one is legal
  CHECK_THROWS_WITH(parse_config("normal_k = 2\n"), "invalid value for normal_k: '2'");
  CHECK_THROWS_WITH(parse_config("lambda_point = -1\n"),
                    "invalid value for lambda_point: '-1'");
  CHECK_NOTHROW(parse_config("lambda_point = 0\n"));  // point term may be disabled
  CHECK_THROWS_WITH(parse_config("event_dt_max = -1\n"),
                    "invalid value for event_dt_max: '-1'");
  CHECK_NOTHROW(parse_config("cg_max_iters = 0\n"));  // 0 = automatic budget
}

TEST_CASE("booleans accept the usual spellings") {
  CHECK(parse_config("pure_gn = true\n").pipeline.icp.objective.pure_gn);
  CHECK(parse_config("pure_gn = 1\n").pipeline.icp.objective.pure_gn);
  CHECK(parse_config("pure_gn = on\n").pipeline.icp.objective.pure_gn);
  CHECK(!parse_config("pure_gn = false\n").pipeline.icp.objective.pure_gn);
  CHECK(!parse_config("pure_gn = 0\n").pipeline.icp.objective.pure_gn);
  CHECK(!parse_config("pure_gn = off\n").pipeline.icp.objective.pure_gn);
  CHECK_THROWS_WITH(parse_config("pure_gn = yes\n"), "invalid value for pure_gn: 'yes'");
}

TEST_CASE("config files load from disk") {
  const auto dir = std::filesystem::temp_directory_path() / "topowarp_config_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "run.cfg").string();
  {
    std::ofstream out(path);
    out << "rho_s = 0.02\nmode = projective\n";
  }
  const RunConfig cfg = load_config(path);
  CHECK(cfg.pipeline.topology.rho_s == 0.02);
  CHECK(cfg.pipeline.icp.mode == CorrespondenceMode::Projective);

  const std::string missing = (dir / "missing.cfg").string();
  CHECK_THROWS_WITH(load_config(missing), ("cannot open " + missing).c_str());
}
