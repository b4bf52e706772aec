#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "skelkit/contraction.hpp"
#include "skelkit/eval.hpp"
#include "skelkit/geometry.hpp"
#include "skelkit/kinematics.hpp"
#include "skelkit/refine.hpp"
#include "skelkit/rendering.hpp"
#include "skelkit/skeleton.hpp"
#include "skelkit/skinning.hpp"
#include "skelkit/synth.hpp"

namespace fs = std::filesystem;
using namespace skelkit;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file: " + path);
  out << text;
  if (!out) throw IoError("write failure: " + path);
}

// SKELKIT_SEED overrides any configured seed.
bool env_seed(uint64_t& seed) {
  const char* env = std::getenv("SKELKIT_SEED");
  if (!env) return false;
  seed = std::strtoull(env, nullptr, 10);
  return true;
}

int run_synth(const std::string& spec_path, const std::string& out_dir) {
  SynthSpec spec = SynthSpec::from_json(read_file(spec_path));
  env_seed(spec.seed);
  auto [mesh, gt] = generate(spec);
  save_dataset(mesh, gt, out_dir);
  std::cout << "synth: " << mesh.n_vertices() << " vertices, " << gt.positions.size()
            << " frames, " << gt.skeleton.n_bones() << " bones -> " << out_dir << "\n";
  return 0;
}

int run_contract(const std::string& mesh_path, const std::string& out_path,
                 const ContractionConfig& cfg) {
  const TriMesh mesh = load_mesh(mesh_path);
  const TriMesh contracted = contract(mesh, cfg);
  save_mesh(contracted, out_path);
  std::cout << "contract: |volume| " << std::abs(signed_volume(mesh)) << " -> "
            << std::abs(signed_volume(contracted)) << "\n";
  return 0;
}

int run_skeletonize(const std::string& contracted_path, const std::string& mesh_path,
                    const std::string& graph_path, const std::string& skeleton_path) {
  const TriMesh contracted = load_mesh(contracted_path);
  const TriMesh original = mesh_path.empty() ? contracted : load_mesh(mesh_path);
  const SkeletonGraph graph = connectivity_surgery(contracted);
  if (!graph_path.empty()) write_file(graph_path, skeleton_graph_to_json(graph));
  const Skeleton skeleton = skeleton_from_graph(graph, original);
  save_skeleton(skeleton, skeleton_path);
  std::cout << "skeletonize: " << graph.nodes.size() << " nodes, " << skeleton.n_bones()
            << " bones, " << skeleton.n_joints() << " joints\n";
  return 0;
}

int run_skin(const std::string& mesh_path, const std::string& skeleton_path,
             const std::string& out_path, const std::string& json_path, double temperature) {
  const TriMesh mesh = load_mesh(mesh_path);
  const Skeleton skeleton = load_skeleton(skeleton_path);
  const SkinningWeights weights =
      compute_skinning_weights(mesh, skeleton, nullptr, temperature);
  save_weights(weights, out_path);
  if (!json_path.empty()) write_file(json_path, weights_to_json(weights));
  std::cout << "skin: " << weights.n_vertices() << " x " << weights.n_bones() << " weights\n";
  return 0;
}

int run_render(const std::string& mesh_path, const std::string& weights_path,
               const std::string& poses_path, const std::string& camera_path,
               const std::string& out_dir) {
  const TriMesh mesh = load_mesh(mesh_path);
  const SkinningWeights weights = load_weights(weights_path);
  std::vector<PoseFrame> poses = load_poses(poses_path);
  const Camera camera = camera_from_json(read_file(camera_path));
  fs::create_directories(out_dir);
  std::vector<std::vector<Vec3>> posed(poses.size());
  char name[64];
  for (size_t f = 0; f < poses.size(); ++f) {
    posed[f] = blend_skin(mesh, weights, poses[f]);
    const SilhouetteRaster sil = rasterize_silhouette(posed[f], mesh.faces, camera);
    std::snprintf(name, sizeof(name), "frame_%04zu.pgm", f);
    save_pgm(sil, (fs::path(out_dir) / name).string());
  }
  for (size_t f = 0; f + 1 < poses.size(); ++f) {
    const FlowRaster flow =
        flow_from_correspondence(posed[f], posed[f + 1], camera, camera, mesh.faces);
    std::snprintf(name, sizeof(name), "flow_%04zu.bin", f);
    save_flow(flow, (fs::path(out_dir) / name).string());
  }
  std::cout << "render: " << poses.size() << " silhouettes -> " << out_dir << "\n";
  return 0;
}

int run_refine(const std::string& mesh_path, const std::string& frames_path,
               const std::string& config_path, const std::string& out_dir) {
  RefineConfig cfg;
  if (!config_path.empty()) cfg = RefineConfig::from_json(read_file(config_path));
  env_seed(cfg.seed);

  // --frames accepts the dataset directory or its targets.json.
  fs::path dataset_dir(frames_path);
  if (dataset_dir.extension() == ".json") dataset_dir = dataset_dir.parent_path();
  const Dataset ds = load_dataset(dataset_dir.string());
  const TriMesh mesh = mesh_path.empty() ? ds.mesh : load_mesh(mesh_path);

  const std::vector<FrameData> frames = frames_from_ground_truth(mesh, ds.gt);
  fs::create_directories(out_dir);
  const SiosResult result = sios2(mesh, frames, cfg, out_dir);

  save_skeleton(result.skeleton, (fs::path(out_dir) / "skeleton.json").string());
  save_weights(result.weights, (fs::path(out_dir) / "weights.bin").string());
  save_poses(result.poses, (fs::path(out_dir) / "poses.json").string());
  write_file((fs::path(out_dir) / "losses.csv").string(), result.losses.to_csv());
  std::cout << "refine: " << result.history.size() << " refinement steps, final "
            << result.skeleton.n_bones() << " bones, " << result.skeleton.n_joints()
            << " joints -> " << out_dir << "\n";
  return 0;
}

int run_eval(const std::string& run_dir, const std::string& gt_dir, std::string out_path) {
  const EvalMetrics metrics = evaluate_run(run_dir, gt_dir);
  if (out_path.empty()) out_path = (fs::path(run_dir) / "metrics.json").string();
  write_file(out_path, metrics.to_json());
  std::cout << metrics.to_json() << "\n";
  return 0;
}

int run_export(const std::string& skeleton_path, const std::string& weights_path,
               const std::string& out_dir) {
  fs::create_directories(out_dir);
  if (!skeleton_path.empty()) {
    const Skeleton skeleton = load_skeleton(skeleton_path);
    std::ostringstream obj;
    obj.precision(17);
    for (const Bone& b : skeleton.bones) {
      const auto [lo, hi] = b.endpoints();
      obj << "v " << lo.x() << ' ' << lo.y() << ' ' << lo.z() << "\n";
      obj << "v " << hi.x() << ' ' << hi.y() << ' ' << hi.z() << "\n";
    }
    for (int b = 0; b < skeleton.n_bones(); ++b) {
      obj << "l " << 2 * b + 1 << ' ' << 2 * b + 2 << "\n";
    }
    write_file((fs::path(out_dir) / "skeleton.obj").string(), obj.str());
  }
  if (!weights_path.empty()) {
    const SkinningWeights weights = load_weights(weights_path);
    write_file((fs::path(out_dir) / "weights.json").string(), weights_to_json(weights));
  }
  std::cout << "export -> " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"skelkit: implicit skeletal representation from mesh motion"};
  app.require_subcommand(1);

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic articulated dataset");
  std::string synth_spec, synth_out;
  synth_cmd->add_option("--spec", synth_spec, "synth spec JSON")->required();
  synth_cmd->add_option("--out", synth_out, "output dataset directory")->required();

  // contract
  auto* contract_cmd = app.add_subcommand("contract", "Laplacian mesh contraction");
  std::string contract_mesh, contract_out;
  ContractionConfig ccfg;
  contract_cmd->add_option("--mesh", contract_mesh, "input OBJ mesh")->required();
  contract_cmd->add_option("--out", contract_out, "contracted OBJ output")->required();
  contract_cmd->add_option("--sl", ccfg.s_l, "contraction weight escalation");
  contract_cmd->add_option("--vol-eps", ccfg.vol_eps, "volume termination ratio");
  contract_cmd->add_option("--max-iters", ccfg.max_iters, "iteration budget");

  // skeletonize
  auto* skel_cmd = app.add_subcommand("skeletonize", "connectivity surgery + bone extraction");
  std::string skel_contracted, skel_mesh, skel_graph, skel_out;
  skel_cmd->add_option("--contracted", skel_contracted, "contracted OBJ mesh")->required();
  skel_cmd->add_option("--mesh", skel_mesh, "original OBJ mesh (for bone radii)");
  skel_cmd->add_option("--graph", skel_graph, "optional skeleton graph JSON output");
  skel_cmd->add_option("--skeleton", skel_out, "skeleton JSON output")->required();

  // skin
  auto* skin_cmd = app.add_subcommand("skin", "compute skinning weights");
  std::string skin_mesh, skin_skeleton, skin_out, skin_json;
  double skin_temperature = 1.0;
  skin_cmd->add_option("--mesh", skin_mesh, "OBJ mesh")->required();
  skin_cmd->add_option("--skeleton", skin_skeleton, "skeleton JSON")->required();
  skin_cmd->add_option("--out", skin_out, "binary weights output")->required();
  skin_cmd->add_option("--json", skin_json, "optional JSON weights output");
  skin_cmd->add_option("--temperature", skin_temperature, "softmax temperature");

  // render
  auto* render_cmd = app.add_subcommand("render", "rasterize silhouettes and flows");
  std::string render_mesh, render_weights, render_poses, render_camera, render_out;
  render_cmd->add_option("--mesh", render_mesh, "OBJ mesh")->required();
  render_cmd->add_option("--weights", render_weights, "binary skinning weights")->required();
  render_cmd->add_option("--pose", render_poses, "pose sequence JSON")->required();
  render_cmd->add_option("--camera", render_camera, "camera JSON")->required();
  render_cmd->add_option("--out-dir", render_out, "output directory")->required();

  // refine
  auto* refine_cmd = app.add_subcommand("refine", "run the SIOS^2 optimization loop");
  std::string refine_mesh, refine_frames, refine_config, refine_out;
  refine_cmd->add_option("--mesh", refine_mesh, "canonical OBJ mesh (defaults to dataset mesh)");
  refine_cmd->add_option("--frames", refine_frames, "dataset directory or its targets.json")
      ->required();
  refine_cmd->add_option("--config", refine_config, "refine config JSON");
  refine_cmd->add_option("--out", refine_out, "run output directory")->required();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "compare a run against ground truth");
  std::string eval_run, eval_gt, eval_out;
  eval_cmd->add_option("--run", eval_run, "run directory")->required();
  eval_cmd->add_option("--gt", eval_gt, "ground-truth dataset directory")->required();
  eval_cmd->add_option("--out", eval_out, "metrics JSON path (default run/metrics.json)");

  // export
  auto* export_cmd = app.add_subcommand("export", "export artifacts to viewable formats");
  std::string export_skeleton, export_weights, export_out;
  export_cmd->add_option("--skeleton", export_skeleton, "skeleton JSON");
  export_cmd->add_option("--weights", export_weights, "binary weights");
  export_cmd->add_option("--out-dir", export_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    nlohmann::json err;
    err["error"] = e.what();
    err["code"] = 2;
    std::cerr << err.dump() << "\n";
    return 2;
  }

  try {
    if (*synth_cmd) return run_synth(synth_spec, synth_out);
    if (*contract_cmd) return run_contract(contract_mesh, contract_out, ccfg);
    if (*skel_cmd) return run_skeletonize(skel_contracted, skel_mesh, skel_graph, skel_out);
    if (*skin_cmd) return run_skin(skin_mesh, skin_skeleton, skin_out, skin_json, skin_temperature);
    if (*render_cmd)
      return run_render(render_mesh, render_weights, render_poses, render_camera, render_out);
    if (*refine_cmd) return run_refine(refine_mesh, refine_frames, refine_config, refine_out);
    if (*eval_cmd) return run_eval(eval_run, eval_gt, eval_out);
    if (*export_cmd) return run_export(export_skeleton, export_weights, export_out);
  } catch (const IoError& e) {
    nlohmann::json err;
    err["error"] = e.what();
    err["code"] = 2;
    std::cerr << err.dump() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    nlohmann::json err;
    err["error"] = e.what();
    err["code"] = 3;
    std::cerr << err.dump() << "\n";
    return 3;
  } catch (const std::exception& e) {
    nlohmann::json err;
    err["error"] = std::string("internal error: ") + e.what();
    err["code"] = 3;
    std::cerr << err.dump() << "\n";
    return 3;
  }
  return 0;
}
