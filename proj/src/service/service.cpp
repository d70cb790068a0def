// Copyright 2026 The ggpseg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "service/service.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <utility>

#include "httplib.h"
#include "model/checkpoint.hpp"
#include "numerics/errors.hpp"
#include "service/base64.hpp"
#include "service/png.hpp"

namespace ggpseg {
namespace {

using nlohmann::json;

int status_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kNotFound: return 404;
    case ErrorKind::kConflict: return 409;
    case ErrorKind::kDimension:
    case ErrorKind::kUsage:
    case ErrorKind::kFormat: return 422;
    case ErrorKind::kNumeric:
    case ErrorKind::kIo: return 500;
  }
  return 500;
}

Reply json_reply(int status, const json& body) {
  return {status, body.dump(), "application/json"};
}

Reply error_reply(int status, const std::string& code, const std::string& message) {
  return json_reply(status, {{"apiVersion", kApiVersion},
                             {"error", {{"code", code}, {"message", message}}}});
}

template <typename F>
Reply guarded(F&& handler) {
  try {
    return handler();
  } catch (const Error& e) {
    const int status = status_for(e.kind());
    return error_reply(status, status == 404   ? "not-found"
                               : status == 409 ? "conflict"
                               : status == 422 ? "unprocessable"
                                               : "internal",
                       e.what());
  } catch (const json::exception& e) {
    return error_reply(400, "bad-request", e.what());
  } catch (const std::exception& e) {
    return error_reply(500, "internal", e.what());
  }
}

json parse_body(const std::string& body) {
  json j = json::parse(body);
  if (!j.is_object()) throw FormatError("request body must be a JSON object");
  if (j.value("apiVersion", kApiVersion) != kApiVersion) {
    throw FormatError("unsupported apiVersion");
  }
  return j;
}

std::size_t parse_index(const std::string& text) {
  std::size_t value = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw NotFoundError("no slice '" + text + "'");
  }
  return value;
}

Target parse_target_or_throw(const std::string& name) {
  const auto t = parse_target(name);
  if (!t) throw UsageError("unknown target '" + name + "'");
  return *t;
}

json optional_number(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

std::string encode_mask(const Mask& mask) {
  return base64_encode(
      std::string_view(reinterpret_cast<const char*>(mask.data()), mask.size()));
}

Mask decode_mask(const std::string& text, std::size_t expected_pixels) {
  const std::string raw = base64_decode(text);
  if (raw.size() != expected_pixels) {
    throw DimensionError("mask has " + std::to_string(raw.size()) + " pixels, expected " +
                         std::to_string(expected_pixels));
  }
  Mask out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto byte = static_cast<std::uint8_t>(raw[i]);
    if (byte > 1) throw FormatError("mask values must be 0 or 1");
    out[i] = byte;
  }
  return out;
}

json volume_upload_body(const Volume& vol) {
  json body{{"apiVersion", kApiVersion},
            {"header", volume_header(vol)},
            {"images", base64_encode(std::string_view(
                           reinterpret_cast<const char*>(vol.images.data()),
                           vol.images.size() * sizeof(float)))}};
  if (vol.has_masks()) {
    json masks = json::object();
    for (Target t : kAllTargets) {
      masks[std::string(target_name(t))] = encode_mask(to_mask(vol.masks[static_cast<std::size_t>(t)]));
    }
    body["masks"] = masks;
  }
  return body;
}

Service::Service(std::map<Target, TargetModels> models, ServiceOptions options)
    : models_(std::move(models)), options_(std::move(options)) {
  for (const auto& [target, m] : models_) {
    if (!m.model) throw UsageError("service needs a model for every listed target");
    if (m.interactive &&
        m.interactive->config().nodes != m.model->config().sequence_length) {
      throw UsageError("interactive propagator and model disagree on sequence length");
    }
  }
}

std::unique_ptr<Service> Service::from_checkpoints(const std::vector<std::filesystem::path>& checkpoints,
                                  const std::vector<std::filesystem::path>& interactive,
                                  ServiceOptions options) {
  std::map<Target, TargetModels> models;
  for (const auto& dir : checkpoints) {
    auto loaded = load_model(dir);
    const Target t = parse_target_or_throw(loaded.manifest.value("target", "gtv"));
    loaded.model.freeze();
    models[t].model = std::make_shared<const SegmentationModel<float>>(std::move(loaded.model));
  }
  for (const auto& dir : interactive) {
    const Target t =
        parse_target_or_throw(read_checkpoint(dir).manifest.value("target", "gtv"));
    auto p = load_interactive(dir);
    p.freeze();
    if (!models.count(t)) {
      throw UsageError("interactive checkpoint " + dir.string() + " has no main model for " +
                       std::string(target_name(t)));
    }
    models[t].interactive = std::make_shared<const InteractivePropagator>(std::move(p));
  }
  if (models.empty()) throw UsageError("service needs at least one checkpoint");
  return std::make_unique<Service>(std::move(models), std::move(options));
}

std::shared_ptr<Service::Session> Service::find(const std::string& id) const {
  std::lock_guard lock(sessions_mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFoundError("unknown volume '" + id + "'");
  return it->second;
}

const TargetModels& Service::models_for(Target target) const {
  auto it = models_.find(target);
  if (it == models_.end()) {
    throw NotFoundError("no checkpoint loaded for target " + std::string(target_name(target)));
  }
  return it->second;
}

std::shared_ptr<const VolumePrediction> Service::prediction(Session& session, Target target) {
  const TargetModels& m = models_for(target);
  std::lock_guard lock(session.cache_mutex);
  auto& slot = session.predictions[target];
  if (!slot) slot = std::make_shared<const VolumePrediction>(predict_volume(*m.model, session.volume));
  return slot;
}

Reply Service::health() const {
  json targets = json::array(), interactive = json::array();
  for (const auto& [t, m] : models_) {
    targets.push_back(std::string(target_name(t)));
    if (m.interactive) interactive.push_back(std::string(target_name(t)));
  }
  return json_reply(200, {{"apiVersion", kApiVersion},
                          {"status", "ok"},
                          {"checkpointVersion", kCheckpointFormatVersion},
                          {"targets", targets},
                          {"interactiveTargets", interactive}});
}

Reply Service::create_volume(const std::string& body) {
  return guarded([&] {
    const json j = parse_body(body);
    std::array<std::string, 3> masks;
    if (j.contains("masks")) {
      for (Target t : kAllTargets) {
        masks[static_cast<std::size_t>(t)] =
            base64_decode(j.at("masks").at(std::string(target_name(t))).get<std::string>());
      }
    }
    Volume vol = volume_from_parts(j.at("header"),
                                   base64_decode(j.at("images").get<std::string>()), masks);
    auto session = std::make_shared<Session>();
    session->volume = std::move(vol);
    {
      std::lock_guard lock(sessions_mutex_);
      session->id = "v" + std::to_string(next_id_++);
      sessions_[session->id] = session;
    }
    const Volume& v = session->volume;
    return json_reply(201, {{"apiVersion", kApiVersion},
                            {"volumeId", session->id},
                            {"name", v.name},
                            {"depth", v.depth()},
                            {"height", v.height()},
                            {"width", v.width()},
                            {"hasMasks", v.has_masks()}});
  });
}

Reply Service::slice_png(const std::string& id, const std::string& slice,
                         const std::string& channel) const {
  return guarded([&] {
    auto session = find(id);
    const Volume& vol = session->volume;
    const std::size_t k = parse_index(slice);
    if (k >= vol.depth()) throw NotFoundError("slice " + slice + " out of range");
    int c = 0;
    if (channel == "pet") {
      c = 1;
    } else if (channel != "ct" && !channel.empty()) {
      throw UsageError("channel must be ct or pet");
    }
    const std::size_t plane = vol.height() * vol.width();
    const float* values = vol.images.data() + (k * 2 + static_cast<std::size_t>(c)) * plane;
    const auto pixels = c == 0 ? window_level(values, plane, kCtWindowLow, kCtWindowHigh)
                               : window_level(values, plane, kPetWindowLow, kPetWindowHigh);
    return Reply{200, encode_png_gray(pixels, vol.height(), vol.width()), "image/png"};
  });
}

Reply Service::predict(const std::string& id, const std::string& target_name_text) {
  return guarded([&] {
    auto session = find(id);
    const Target target = parse_target_or_throw(target_name_text.empty() ? "gtv" : target_name_text);
    auto pred = prediction(*session, target);
    const Volume& vol = session->volume;
    json masks = json::array(), dscs = json::array();
    for (std::size_t k = 0; k < vol.depth(); ++k) {
      masks.push_back(encode_mask(pred->masks[k]));
      if (vol.has_masks()) {
        dscs.push_back(optional_number(dsc(pred->masks[k], to_mask(vol.mask_plane(target, k)))));
      }
    }
    json out{{"apiVersion", kApiVersion},
             {"volumeId", id},
             {"target", std::string(target_name(target))},
             {"depth", vol.depth()},
             {"height", vol.height()},
             {"width", vol.width()},
             {"masks", masks}};
    if (vol.has_masks()) out["dsc"] = dscs;
    return json_reply(200, out);
  });
}

Reply Service::edit(const std::string& id, const std::string& body) {
  return guarded([&] {
    auto session = find(id);
    const json j = parse_body(body);
    const Target target = parse_target_or_throw(j.value("target", std::string("gtv")));
    const TargetModels& m = models_for(target);
    if (!m.interactive) {
      throw NotFoundError("no interactive checkpoint loaded for target " +
                          std::string(target_name(target)));
    }
    const Volume& vol = session->volume;
    const std::size_t depth = vol.depth();
    const auto slice = j.at("sliceIndex").get<std::size_t>();
    if (slice >= depth) throw UsageError("sliceIndex out of range");
    const Mask user = decode_mask(j.at("mask").get<std::string>(), vol.height() * vol.width());

    const std::size_t n = m.interactive->config().nodes;
    const std::size_t half = n / 2;
    std::size_t center = depth > n ? std::clamp(slice, half, depth - 1 - half) : slice;
    if (j.contains("center")) center = j.at("center").get<std::size_t>();
    if (center >= depth) throw UsageError("center out of range");
    const auto window = window_indices(center, n, depth);
    const auto pos = std::find(window.begin(), window.end(), slice);
    if (pos == window.end()) throw UsageError("sliceIndex is not inside the sequence");
    const auto position = static_cast<std::size_t>(pos - window.begin());

    std::unique_lock lock(session->edit_mutex, std::try_to_lock);
    if (!lock.owns_lock()) throw ConflictError("an edit is already running on " + id);
    if (options_.on_edit_locked) options_.on_edit_locked();

    auto pred = prediction(*session, target);
    auto refined = refine_neighbors(*m.model, *m.interactive, *pred, center, position, user,
                                    options_.reconstruction);

    json masks = json::array(), before = json::array(), after = json::array();
    std::vector<double> neighbor_before, neighbor_after;
    for (std::size_t u = 0; u < window.size(); ++u) {
      masks.push_back({{"slice", window[u]}, {"mask", encode_mask(refined.masks[u])}});
      if (!vol.has_masks()) continue;
      const Mask truth = to_mask(vol.mask_plane(target, window[u]));
      const auto b = dsc(pred->masks[window[u]], truth);
      const auto a = dsc(refined.masks[u], truth);
      before.push_back(optional_number(b));
      after.push_back(optional_number(a));
      if (u != position && window[u] != slice && a && b) {
        neighbor_before.push_back(*b);
        neighbor_after.push_back(*a);
      }
    }
    json out{{"apiVersion", kApiVersion},
             {"volumeId", id},
             {"target", std::string(target_name(target))},
             {"sliceIndex", slice},
             {"center", center},
             {"editedPosition", position},
             {"sourceSlices", window},
             {"reconstructionTrace", to_json(refined.trace)},
             {"refinedMasks", masks}};
    if (vol.has_masks()) {
      out["perSliceDscBefore"] = before;
      out["perSliceDscAfter"] = after;
      out["meanNeighborDscBefore"] = summarize(neighbor_before).mean;
      out["meanNeighborDscAfter"] = summarize(neighbor_after).mean;
    }
    session->edits.push_back({{"target", std::string(target_name(target))},
                              {"sliceIndex", slice},
                              {"center", center},
                              {"iterations", refined.trace.iterations}});
    return json_reply(200, out);
  });
}

void Service::mount(httplib::Server& server) {
  auto send = [](httplib::Response& res, const Reply& r) {
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  server.Get("/healthz", [this, send](const httplib::Request&, httplib::Response& res) {
    send(res, health());
  });
  server.Post("/volumes", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, create_volume(req.body));
  });
  server.Get(R"(/volumes/([^/]+)/slices/([^/]+))",
             [this, send](const httplib::Request& req, httplib::Response& res) {
               send(res, slice_png(req.matches[1], req.matches[2],
                                   req.get_param_value("channel")));
             });
  server.Post(R"(/volumes/([^/]+)/predict)",
              [this, send](const httplib::Request& req, httplib::Response& res) {
                send(res, predict(req.matches[1], req.get_param_value("target")));
              });
  server.Post(R"(/volumes/([^/]+)/edits)",
              [this, send](const httplib::Request& req, httplib::Response& res) {
                send(res, edit(req.matches[1], req.body));
              });
}

void Service::listen(const std::string& host, int port, const std::function<void(int)>& on_bound) {
  server_ = std::make_shared<httplib::Server>();
  mount(*server_);
  int bound = port;
  if (port == 0) {
    bound = server_->bind_to_any_port(host);
  } else if (!server_->bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw IoError("cannot bind " + host + ":" + std::to_string(port));
  if (on_bound) on_bound(bound);
  server_->listen_after_bind();
}

void Service::stop() {
  if (server_) server_->stop();
}

}  // namespace ggpseg
