#pragma once

// HTTP+JSON annotation service over a dataset file.
//
// Routes (all bodies and responses are JSON unless noted):
//   GET  /api/health
//   GET  /api/scenes                        -> {scenes: [{scene, show, records, hypotheses}]}
//   GET  /api/scenes/:scene/hypotheses      -> {scene, records: [record]}; ?status=all lists every status
//   GET  /api/records/:id                   -> record
//   GET  /api/records/:id/image             -> the record's frame as PGM bytes
//   POST /api/records                       {scene, anchor: [x,y], joints: [[x,y] x17]} -> 201 record
//   POST /api/records/:id/accept            -> record
//   POST /api/records/:id/reject            -> record
//   POST /api/records/:id/adjust            {joints, scale, translate: [dx,dy]} -> record
//   POST /api/predict                       {scene, point: [x,y], samples, seed, joints?}
//                                           -> {class_id, scores, poses, distance?, plausible?}
//
// Errors come back as {error: <kind>, message}; not-found 404, conflict 409,
// malformed input 400, models not loaded 503.

#include <httplib.h>

#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <unordered_map>

#include "affordance/dataset.hpp"
#include "affordance/image.hpp"
#include "affordance/scene_features.hpp"
#include "artifacts.hpp"
#include "json_io.hpp"

namespace affordance::tool {

inline int http_status(ErrorKind k) {
  switch (k) {
    case ErrorKind::not_found: return 404;
    case ErrorKind::conflict: return 409;
    case ErrorKind::bad_request:
    case ErrorKind::format:
    case ErrorKind::invalid_pose:
    case ErrorKind::invalid_scale:
    case ErrorKind::shape:
    case ErrorKind::usage:
    case ErrorKind::out_of_bounds: return 400;
    case ErrorKind::state: return 503;
    default: return 500;
  }
}

struct ServiceOptions {
  std::string dataset_path;
  std::optional<ModelBundle> models;
  std::size_t max_samples = 256;
};

class AnnotationService {
 public:
  explicit AnnotationService(ServiceOptions options) : options_(std::move(options)) {
    dataset_ = read_dataset(options_.dataset_path);
    reindex();
    if (options_.models) {
      featurizer_.emplace(options_.models->classifier.dims().feature_dim, options_.models->featurizer_seed);
    }
    routes();
  }

  httplib::Server& server() { return server_; }

  /// Bind to an ephemeral port on `host` and return it; call serve() next.
  int bind_any(const std::string& host) { return server_.bind_to_any_port(host); }
  bool bind(const std::string& host, int port) { return server_.bind_to_port(host, port); }
  bool serve() { return server_.listen_after_bind(); }
  void stop() { server_.stop(); }

  Dataset snapshot() const {
    std::shared_lock lock(state_);
    return dataset_;
  }

 private:
  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  static void send(httplib::Response& res, const json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static Handler guarded(Handler h) {
    return [h](const httplib::Request& req, httplib::Response& res) {
      try {
        h(req, res);
      } catch (const Error& e) {
        send(res, {{"error", to_string(e.kind())}, {"message", e.what()}}, http_status(e.kind()));
      } catch (const json::exception& e) {
        send(res, {{"error", "bad-request"}, {"message", e.what()}}, 400);
      } catch (const std::exception& e) {
        send(res, {{"error", "internal"}, {"message", e.what()}}, 500);
      }
    };
  }

  static json body_of(const httplib::Request& req) {
    json b = json::parse(req.body, nullptr, false);
    if (b.is_discarded() || !b.is_object()) throw Error(ErrorKind::bad_request, "body must be a JSON object");
    return b;
  }

  static std::uint64_t id_of(const httplib::Request& req) {
    const std::string& s = req.path_params.at("id");
    std::uint64_t id = 0;
    if (!text::parse_int(s, id)) throw Error(ErrorKind::bad_request, "record id must be an unsigned integer");
    return id;
  }

  void reindex() {
    index_.clear();
    for (std::size_t i = 0; i < dataset_.records.size(); ++i) index_[dataset_.records[i].id] = i;
  }

  AffordanceRecord record(std::uint64_t id) const {
    std::shared_lock lock(state_);
    const auto it = index_.find(id);
    if (it == index_.end()) throw Error(ErrorKind::not_found, "no record " + std::to_string(id));
    return dataset_.records[it->second];
  }

  /// One writer at a time: apply to a copy, persist, then publish. A failed
  /// write leaves both the file and the served state untouched.
  template <class F>
  AffordanceRecord mutate(F&& change) {
    std::lock_guard writer(writer_);
    Dataset next = snapshot();
    AffordanceRecord out = change(next);
    write_dataset(next, options_.dataset_path);
    std::unique_lock lock(state_);
    dataset_ = std::move(next);
    reindex();
    return out;
  }

  AffordanceRecord mutate_record(std::uint64_t id, const std::function<void(AffordanceRecord&)>& f) {
    return mutate([&](Dataset& ds) {
      for (auto& r : ds.records) {
        if (r.id == id) {
          f(r);
          return r;
        }
      }
      throw Error(ErrorKind::not_found, "no record " + std::to_string(id));
    });
  }

  /// First record (lowest id) of a scene; its frame stands for the scene.
  AffordanceRecord scene_record(const std::string& scene) const {
    std::shared_lock lock(state_);
    const AffordanceRecord* best = nullptr;
    for (const auto& r : dataset_.records) {
      if (r.scene == scene && (!best || r.id < best->id)) best = &r;
    }
    if (!best) throw Error(ErrorKind::not_found, "no scene " + scene);
    return *best;
  }

  void routes() {
    server_.Get("/api/health", guarded([this](const httplib::Request&, httplib::Response& res) {
      std::shared_lock lock(state_);
      send(res, {{"status", "ok"}, {"records", dataset_.records.size()}, {"models", options_.models.has_value()}});
    }));

    server_.Get("/api/scenes", guarded([this](const httplib::Request&, httplib::Response& res) {
      struct Row {
        std::string show;
        std::size_t records = 0, hypotheses = 0;
      };
      std::map<std::string, Row> rows;
      {
        std::shared_lock lock(state_);
        for (const auto& r : dataset_.records) {
          auto& row = rows[r.scene];
          row.show = r.show;
          ++row.records;
          row.hypotheses += r.status == RecordStatus::hypothesis;
        }
      }
      json scenes = json::array();
      for (const auto& [scene, row] : rows) {
        scenes.push_back({{"scene", scene}, {"show", row.show}, {"records", row.records}, {"hypotheses", row.hypotheses}});
      }
      send(res, {{"scenes", scenes}});
    }));

    server_.Get("/api/scenes/:scene/hypotheses", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const std::string scene = req.path_params.at("scene");
      const bool all = req.get_param_value("status") == "all";
      json list = json::array();
      bool known = false;
      {
        std::shared_lock lock(state_);
        for (const auto& r : dataset_.records) {
          if (r.scene != scene) continue;
          known = true;
          if (all || r.status == RecordStatus::hypothesis) list.push_back(record_json(r));
        }
      }
      if (!known) throw Error(ErrorKind::not_found, "no scene " + scene);
      send(res, {{"scene", scene}, {"records", list}});
    }));

    server_.Get("/api/records/:id", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send(res, record_json(record(id_of(req))));
    }));

    server_.Get("/api/records/:id/image", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto r = record(id_of(req));
      res.set_content(encode_pgm(read_image(r.image)), "image/x-portable-graymap");
    }));

    server_.Post("/api/records", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json b = body_of(req);
      if (!b.contains("scene") || !b["scene"].is_string()) throw Error(ErrorKind::bad_request, "scene is required");
      const AffordanceRecord proto = scene_record(b["scene"].get<std::string>());
      const Point2 anchor = point_from_json(b.value("anchor", json()), "anchor");
      const Pose pose(joints_from_json(b.value("joints", json())));
      const auto created = mutate([&](Dataset& ds) {
        AffordanceRecord r;
        for (const auto& other : ds.records) r.id = std::max(r.id, other.id);
        ++r.id;
        r.scene = proto.scene;
        r.show = proto.show;
        r.image = proto.image;
        r.frame_width = proto.frame_width;
        r.frame_height = proto.frame_height;
        r.anchor = anchor;
        r.pose = pose;
        r.source = RecordSource::manual;
        r.out_of_frame = !pose_in_frame(pose, r.frame_width, r.frame_height);
        if (proto.features && anchor.x >= 0 && anchor.y >= 0 && anchor.x < r.frame_width && anchor.y < r.frame_height) {
          const RandomProjectionFeaturizer f(static_cast<std::size_t>(proto.features->full.size()), ds.featurizer_seed);
          r.features = extract_scene_features(f, read_image(r.image), anchor);
        }
        ds.records.push_back(r);
        return r;
      });
      send(res, record_json(created), 201);
    }));

    server_.Post("/api/records/:id/accept", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send(res, record_json(mutate_record(id_of(req), [](AffordanceRecord& r) { accept(r); })));
    }));

    server_.Post("/api/records/:id/reject", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send(res, record_json(mutate_record(id_of(req), [](AffordanceRecord& r) { reject(r); })));
    }));

    server_.Post("/api/records/:id/adjust", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto id = id_of(req);
      const json b = body_of(req);
      const Joints joints = joints_from_json(b.value("joints", json()));
      Adjustment a;
      if (b.contains("scale")) {
        if (!b["scale"].is_number()) throw Error(ErrorKind::bad_request, "scale must be a number");
        a.scale = b["scale"].get<double>();
      }
      if (b.contains("translate")) a.translate = point_from_json(b["translate"], "translate");
      send(res, record_json(mutate_record(id, [&](AffordanceRecord& r) { adjust(r, joints, a); })));
    }));

    server_.Post("/api/predict", guarded([this](const httplib::Request& req, httplib::Response& res) {
      if (!options_.models) throw Error(ErrorKind::state, "server was started without models");
      const json b = body_of(req);
      if (!b.contains("scene") || !b["scene"].is_string()) throw Error(ErrorKind::bad_request, "scene is required");
      const AffordanceRecord proto = scene_record(b["scene"].get<std::string>());
      const Point2 point = point_from_json(b.value("point", json()), "point");
      const auto samples = b.value("samples", std::int64_t{5});
      if (samples < 1 || static_cast<std::size_t>(samples) > options_.max_samples) {
        throw Error(ErrorKind::bad_request, "samples must be in [1, " + std::to_string(options_.max_samples) + "]");
      }
      const auto seed = b.value("seed", std::uint64_t{0});
      const Image img = read_image(proto.image);
      if (point.x < 0 || point.y < 0 || point.x >= img.width() || point.y >= img.height()) {
        throw Error(ErrorKind::out_of_bounds, "point lies outside the scene");
      }
      const auto& m = *options_.models;
      const SceneFeatures feats = extract_scene_features(*featurizer_, img, point);
      const auto gen = generate_pose(m.classifier, m.vae, feats, point, m.vocab, seed, static_cast<std::size_t>(samples));
      json out = {{"scene", proto.scene}, {"point", point_json(point)}, {"class_id", gen.front().class_id}};
      json scores = json::array();
      for (auto k : rank_classes(gen.front().scores)) {
        if (scores.size() == 5) break;
        scores.push_back({{"class_id", k}, {"p", gen.front().scores(static_cast<Eigen::Index>(k))}});
      }
      out["scores"] = scores;
      json poses = json::array();
      for (const auto& g : gen) poses.push_back(generated_json(g));
      out["poses"] = poses;
      if (b.contains("joints")) {
        const Pose candidate(joints_from_json(b["joints"]));
        double total = 0.0;
        for (const auto& g : gen) total += joint_distance(g.pose, candidate);
        const double d = total / static_cast<double>(gen.size());
        out["distance"] = d;
        out["plausible"] = d < m.delta;
      }
      send(res, out);
    }));
  }

  ServiceOptions options_;
  std::optional<RandomProjectionFeaturizer> featurizer_;
  httplib::Server server_;
  mutable std::shared_mutex state_;
  std::mutex writer_;
  Dataset dataset_;
  std::unordered_map<std::uint64_t, std::size_t> index_;
};

}  // namespace affordance::tool
