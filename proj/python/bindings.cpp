#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "skelkit/contraction.hpp"
#include "skelkit/eval.hpp"
#include "skelkit/flowwarp.hpp"
#include "skelkit/geometry.hpp"
#include "skelkit/kinematics.hpp"
#include "skelkit/losses.hpp"
#include "skelkit/refine.hpp"
#include "skelkit/rendering.hpp"
#include "skelkit/skeleton.hpp"
#include "skelkit/skinning.hpp"
#include "skelkit/synth.hpp"
#include "skelkit/transform.hpp"

namespace py = pybind11;
using namespace skelkit;

namespace {

std::vector<Vec3> to_points(const Eigen::MatrixXd& m) {
  if (m.cols() != 3) throw IoError("expected an N x 3 array of points");
  std::vector<Vec3> out(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) out[i] = m.row(i).transpose();
  return out;
}

Eigen::MatrixXd from_points(const std::vector<Vec3>& pts) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(pts.size()), 3);
  for (size_t i = 0; i < pts.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = pts[i].transpose();
  return m;
}

Eigen::MatrixXi faces_matrix(const std::vector<Face>& faces) {
  Eigen::MatrixXi m(static_cast<Eigen::Index>(faces.size()), 3);
  for (size_t i = 0; i < faces.size(); ++i) {
    for (int k = 0; k < 3; ++k) m(static_cast<Eigen::Index>(i), k) = faces[i][k];
  }
  return m;
}

std::vector<Face> to_faces(const Eigen::MatrixXi& m) {
  if (m.cols() != 3) throw IoError("expected an F x 3 array of face indices");
  std::vector<Face> out(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) out[i] = {m(i, 0), m(i, 1), m(i, 2)};
  return out;
}

py::array_t<float> raster_array(const SilhouetteRaster& r) {
  py::array_t<float> out({r.height, r.width});
  std::copy(r.values.begin(), r.values.end(), out.mutable_data());
  return out;
}

py::tuple flow_arrays(const FlowRaster& r) {
  py::array_t<float> flow({r.height, r.width, 2});
  std::copy(r.flow.begin(), r.flow.end(), flow.mutable_data());
  py::array_t<float> conf({r.height, r.width});
  std::copy(r.confidence.begin(), r.confidence.end(), conf.mutable_data());
  return py::make_tuple(flow, conf);
}

}  // namespace

PYBIND11_MODULE(_skelkit, m) {
  m.doc() = "Implicit skeletal representation learning from mesh motion";

  py::register_exception<IoError>(m, "IoError");
  py::register_exception<NumericalError>(m, "SkelkitNumericalError");

  // ---- geometry ----
  py::class_<TriMesh>(m, "TriMesh")
      .def(py::init([](const Eigen::MatrixXd& vertices, const Eigen::MatrixXi& faces) {
             return TriMesh::from_faces(to_points(vertices), to_faces(faces));
           }),
           py::arg("vertices"), py::arg("faces"))
      .def_property_readonly("vertices", [](const TriMesh& m) { return from_points(m.vertices); })
      .def_property_readonly("faces", [](const TriMesh& m) { return faces_matrix(m.faces); })
      .def_property_readonly("edges",
                             [](const TriMesh& m) {
                               Eigen::MatrixXi e(static_cast<Eigen::Index>(m.edges.size()), 2);
                               for (size_t i = 0; i < m.edges.size(); ++i) {
                                 e(static_cast<Eigen::Index>(i), 0) = m.edges[i][0];
                                 e(static_cast<Eigen::Index>(i), 1) = m.edges[i][1];
                               }
                               return e;
                             })
      .def_property_readonly("n_vertices", &TriMesh::n_vertices)
      .def_property_readonly("n_faces", &TriMesh::n_faces)
      .def_property_readonly("n_edges", &TriMesh::n_edges)
      .def("bbox_diagonal", &TriMesh::bbox_diagonal)
      .def("with_positions", [](const TriMesh& m, const Eigen::MatrixXd& p) {
        return m.with_positions(to_points(p));
      });

  m.def("load_mesh", &load_mesh, py::arg("path"));
  m.def("save_mesh", &save_mesh, py::arg("mesh"), py::arg("path"));
  m.def("make_icosphere", &make_icosphere, py::arg("subdivisions"), py::arg("radius") = 1.0);
  m.def("cotan_laplacian",
        [](const TriMesh& mesh) { return Eigen::MatrixXd(cotan_laplacian(mesh)); },
        py::arg("mesh"), "Dense copy of the cotangent Laplacian");
  m.def("signed_volume", py::overload_cast<const TriMesh&>(&signed_volume), py::arg("mesh"));
  m.def("vertex_areas", [](const TriMesh& mesh) { return vertex_areas(mesh, mesh.vertices); });

  // ---- contraction ----
  py::class_<ContractionConfig>(m, "ContractionConfig")
      .def(py::init<>())
      .def_readwrite("s_l", &ContractionConfig::s_l)
      .def_readwrite("vol_eps", &ContractionConfig::vol_eps)
      .def_readwrite("max_iters", &ContractionConfig::max_iters)
      .def_readwrite("w_a0", &ContractionConfig::w_a0)
      .def_readwrite("w_c0", &ContractionConfig::w_c0);
  m.def("contract", &contract, py::arg("mesh"), py::arg("config") = ContractionConfig{});

  py::class_<SkeletonGraph>(m, "SkeletonGraph")
      .def_property_readonly("nodes", [](const SkeletonGraph& g) { return from_points(g.nodes); })
      .def_property_readonly("edges",
                             [](const SkeletonGraph& g) {
                               Eigen::MatrixXi e(static_cast<Eigen::Index>(g.edges.size()), 2);
                               for (size_t i = 0; i < g.edges.size(); ++i) {
                                 e(static_cast<Eigen::Index>(i), 0) = g.edges[i][0];
                                 e(static_cast<Eigen::Index>(i), 1) = g.edges[i][1];
                               }
                               return e;
                             })
      .def_readonly("edge_absorbed", &SkeletonGraph::edge_absorbed)
      .def_readonly("node_absorbed", &SkeletonGraph::node_absorbed);
  m.def("connectivity_surgery", &connectivity_surgery, py::arg("contracted"));

  // ---- skeleton ----
  py::class_<Bone>(m, "Bone")
      .def_readonly("center", &Bone::center)
      .def_readonly("precision", &Bone::precision)
      .def_readonly("length", &Bone::length)
      .def("major_axis", &Bone::major_axis)
      .def_static("from_axis", &Bone::from_axis, py::arg("center"), py::arg("axis"),
                  py::arg("length"), py::arg("radial"));
  py::class_<Joint>(m, "Joint")
      .def_readonly("bone_a", &Joint::bone_a)
      .def_readonly("bone_b", &Joint::bone_b)
      .def_readonly("position", &Joint::position);
  py::class_<Skeleton>(m, "Skeleton")
      .def(py::init<>())
      .def_readwrite("bones", &Skeleton::bones)
      .def_readwrite("joints", &Skeleton::joints)
      .def_property_readonly("n_bones", &Skeleton::n_bones)
      .def_property_readonly("n_joints", &Skeleton::n_joints);
  m.def("skeleton_from_graph", &skeleton_from_graph, py::arg("graph"), py::arg("mesh"));
  m.def("serialize_skeleton", &serialize_skeleton);
  m.def("deserialize_skeleton", &deserialize_skeleton);
  m.def("save_skeleton", &save_skeleton);
  m.def("load_skeleton", &load_skeleton);

  // ---- skinning ----
  py::class_<SkinningWeights>(m, "SkinningWeights")
      .def(py::init([](const Eigen::MatrixXd& w) {
             SkinningWeights s;
             s.w = w;
             return s;
           }),
           py::arg("w"))
      .def_readwrite("w", &SkinningWeights::w);
  m.def(
      "compute_skinning_weights",
      [](const TriMesh& mesh, const Skeleton& skel, py::object bias, double temperature) {
        if (bias.is_none()) return compute_skinning_weights(mesh, skel, nullptr, temperature);
        const Eigen::MatrixXd b = bias.cast<Eigen::MatrixXd>();
        return compute_skinning_weights(mesh, skel, &b, temperature);
      },
      py::arg("mesh"), py::arg("skeleton"), py::arg("bias") = py::none(),
      py::arg("temperature") = 1.0);
  m.def("rigidity_coefficients",
        [](const SkinningWeights& w, const TriMesh& mesh, double lambda) {
          return rigidity_coefficients(w, mesh.edges, lambda).r;
        },
        py::arg("weights"), py::arg("mesh"), py::arg("lambda_") = 0.1);
  py::class_<PartAssignment>(m, "PartAssignment")
      .def_readonly("part", &PartAssignment::part)
      .def_readonly("counts", &PartAssignment::counts)
      .def_readonly("n_parts", &PartAssignment::n_parts);
  m.def("one_hot_parts", &one_hot_parts, py::arg("weights"));
  m.def("select_small_parts", &select_small_parts, py::arg("parts"), py::arg("fraction") = 0.5);
  m.def("save_weights", &save_weights);
  m.def("load_weights", &load_weights);

  // ---- kinematics ----
  py::class_<RigidTransform>(m, "RigidTransform")
      .def(py::init([](const Eigen::Vector4d& q, const Vec3& t) {
             return RigidTransform::from_parts(Eigen::Quaterniond(q[0], q[1], q[2], q[3]), t);
           }),
           py::arg("q_wxyz"), py::arg("t"))
      .def_static("identity", &RigidTransform::identity)
      .def_static("about_point", &RigidTransform::about_point, py::arg("pivot"), py::arg("axis"),
                  py::arg("angle"))
      .def_property_readonly("q_wxyz",
                             [](const RigidTransform& t) {
                               return Eigen::Vector4d(t.rotation.w(), t.rotation.x(),
                                                      t.rotation.y(), t.rotation.z());
                             })
      .def_property_readonly("t", [](const RigidTransform& t) { return t.translation; })
      .def("matrix", &RigidTransform::matrix)
      .def("inverse", &RigidTransform::inverse)
      .def("apply", [](const RigidTransform& t, const Vec3& p) { return t * p; })
      .def("compose", [](const RigidTransform& a, const RigidTransform& b) { return a * b; });

  py::class_<Camera>(m, "Camera")
      .def(py::init<>())
      .def_readwrite("fx", &Camera::fx)
      .def_readwrite("fy", &Camera::fy)
      .def_readwrite("cx", &Camera::cx)
      .def_readwrite("cy", &Camera::cy)
      .def_readwrite("extrinsic", &Camera::extrinsic)
      .def_readwrite("width", &Camera::width)
      .def_readwrite("height", &Camera::height);

  py::class_<PoseFrame>(m, "PoseFrame")
      .def(py::init(&PoseFrame::identity), py::arg("n_bones"))
      .def_readwrite("root", &PoseFrame::root)
      .def_readwrite("bones", &PoseFrame::bones)
      .def_readwrite("camera", &PoseFrame::camera);

  m.def(
      "blend_skin",
      [](const TriMesh& mesh, const SkinningWeights& w, const PoseFrame& pose) {
        return from_points(blend_skin(mesh, w, pose));
      },
      py::arg("mesh"), py::arg("weights"), py::arg("pose"));
  m.def(
      "backward_blend_skin",
      [](const Eigen::MatrixXd& posed, const SkinningWeights& w, const PoseFrame& pose,
         bool blend_inverses) {
        return from_points(backward_blend_skin(to_points(posed), w, pose, blend_inverses));
      },
      py::arg("posed"), py::arg("weights"), py::arg("pose"), py::arg("blend_inverses") = false);
  m.def(
      "fit_pose_procrustes",
      [](const TriMesh& mesh, const PartAssignment& parts, const Eigen::MatrixXd& targets,
         bool strict) { return fit_pose_procrustes(mesh, parts, to_points(targets), strict); },
      py::arg("mesh"), py::arg("parts"), py::arg("targets"), py::arg("strict") = true);

  // ---- rendering / flow ----
  m.def("project", &project, py::arg("camera"), py::arg("point"));
  m.def(
      "rasterize_silhouette",
      [](const Eigen::MatrixXd& positions, const TriMesh& mesh, const Camera& cam) {
        return raster_array(rasterize_silhouette(to_points(positions), mesh.faces, cam));
      },
      py::arg("positions"), py::arg("mesh"), py::arg("camera"));
  m.def(
      "visibility",
      [](const Eigen::MatrixXd& positions, const TriMesh& mesh, const Camera& cam) {
        return visibility(to_points(positions), mesh.faces, cam);
      },
      py::arg("positions"), py::arg("mesh"), py::arg("camera"));
  m.def(
      "flow_from_correspondence",
      [](const Eigen::MatrixXd& pos_t, const Eigen::MatrixXd& pos_t1, const Camera& cam_t,
         const Camera& cam_t1, const TriMesh& mesh) {
        return flow_arrays(
            flow_from_correspondence(to_points(pos_t), to_points(pos_t1), cam_t, cam_t1,
                                     mesh.faces));
      },
      py::arg("positions_t"), py::arg("positions_t1"), py::arg("camera_t"), py::arg("camera_t1"),
      py::arg("mesh"));
  m.def("cosine_similarity", &cosine_similarity, py::arg("a"), py::arg("b"));

  // ---- losses ----
  m.def(
      "dr_loss",
      [](const Eigen::MatrixXd& pos_t, const Eigen::MatrixXd& pos_t1, const TriMesh& mesh,
         const std::vector<double>& r, double lambda) {
        RigidityCoeffs rc;
        rc.r = r;
        rc.lambda = lambda;
        return dr_loss(to_points(pos_t), to_points(pos_t1), mesh.edges, rc);
      },
      py::arg("pos_t"), py::arg("pos_t1"), py::arg("mesh"), py::arg("rigidity"),
      py::arg("lambda_") = 0.1);
  m.def(
      "arap_loss",
      [](const Eigen::MatrixXd& pos_t, const Eigen::MatrixXd& pos_t1, const TriMesh& mesh) {
        return arap_loss(to_points(pos_t), to_points(pos_t1), mesh.edges);
      },
      py::arg("pos_t"), py::arg("pos_t1"), py::arg("mesh"));
  m.def("shape_loss", [](const TriMesh& mesh) { return shape_loss(mesh); }, py::arg("mesh"));

  // ---- synth ----
  py::class_<SynthSpec>(m, "SynthSpec")
      .def_static("make_chain", &SynthSpec::make_chain, py::arg("lengths"), py::arg("radii"),
                  py::arg("frames"))
      .def_static("quadruped", &SynthSpec::quadruped, py::arg("frames"))
      .def_static("from_json", &SynthSpec::from_json)
      .def("to_json", &SynthSpec::to_json)
      .def_readwrite("frames", &SynthSpec::frames)
      .def_readwrite("joint_angles", &SynthSpec::joint_angles)
      .def_readwrite("root_motion", &SynthSpec::root_motion)
      .def_readwrite("seed", &SynthSpec::seed);
  py::class_<GroundTruth>(m, "GroundTruth")
      .def_readonly("skeleton", &GroundTruth::skeleton)
      .def_readonly("labels", &GroundTruth::labels)
      .def_readonly("poses", &GroundTruth::poses)
      .def_property_readonly("positions",
                             [](const GroundTruth& gt) {
                               std::vector<Eigen::MatrixXd> out;
                               for (const auto& f : gt.positions) out.push_back(from_points(f));
                               return out;
                             })
      .def_property_readonly("keypoints",
                             [](const GroundTruth& gt) { return from_points(gt.keypoints); });
  m.def("generate", [](const SynthSpec& spec) {
    auto [mesh, gt] = generate(spec);
    return py::make_tuple(mesh, gt);
  });
  m.def("corrupt", &corrupt, py::arg("gt"), py::arg("sigma_pos"), py::arg("sigma_flow"),
        py::arg("seed"));
  m.def("save_dataset", &save_dataset, py::arg("mesh"), py::arg("gt"), py::arg("dir"));

  // ---- refine / eval ----
  py::class_<RefineConfig>(m, "RefineConfig")
      .def(py::init<>())
      .def_readwrite("t_r", &RefineConfig::t_r)
      .def_readwrite("t_o", &RefineConfig::t_o)
      .def_readwrite("t_d_factor", &RefineConfig::t_d_factor)
      .def_readwrite("h_frames", &RefineConfig::h_frames)
      .def_readwrite("seed", &RefineConfig::seed)
      .def_readwrite("max_outer_iters", &RefineConfig::max_outer_iters)
      .def_readwrite("temperature", &RefineConfig::temperature)
      .def_static("from_json", &RefineConfig::from_json)
      .def("to_json", &RefineConfig::to_json);
  py::class_<SiosResult>(m, "SiosResult")
      .def_readonly("skeleton", &SiosResult::skeleton)
      .def_readonly("weights", &SiosResult::weights)
      .def_readonly("poses", &SiosResult::poses);
  m.def(
      "sios2",
      [](const TriMesh& mesh, const GroundTruth& gt, const RefineConfig& cfg,
         const std::string& checkpoint_dir) {
        return sios2(mesh, frames_from_ground_truth(mesh, gt), cfg, checkpoint_dir);
      },
      py::arg("mesh"), py::arg("gt"), py::arg("config") = RefineConfig{},
      py::arg("checkpoint_dir") = std::string());

  py::class_<EvalMetrics>(m, "EvalMetrics")
      .def_readonly("bone_count_error", &EvalMetrics::bone_count_error)
      .def_readonly("joint_position_error", &EvalMetrics::joint_position_error)
      .def_readonly("vertex_rms", &EvalMetrics::vertex_rms)
      .def_readonly("part_agreement", &EvalMetrics::part_agreement)
      .def_readonly("keypoint_transfer", &EvalMetrics::keypoint_transfer)
      .def_readonly("chamfer", &EvalMetrics::chamfer)
      .def("to_json", &EvalMetrics::to_json);
  m.def("evaluate", &evaluate, py::arg("mesh"), py::arg("gt"), py::arg("skeleton"),
        py::arg("weights"), py::arg("poses"));
  m.def("evaluate_run", &evaluate_run, py::arg("run_dir"), py::arg("gt_dir"));
}
