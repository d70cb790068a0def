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

#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "interactive/interactive.hpp"
#include "json.hpp"
#include "model/segmentation_model.hpp"
#include "phantom/phantom.hpp"

namespace httplib {
class Server;
}

namespace ggpseg {

inline constexpr int kApiVersion = 1;

/// Fixed display windows for slice renders.
inline constexpr float kCtWindowLow = -1.25f, kCtWindowHigh = 1.25f;
inline constexpr float kPetWindowLow = 0.0f, kPetWindowHigh = 1.5f;

struct TargetModels {
  std::shared_ptr<const SegmentationModel<float>> model;
  std::shared_ptr<const InteractivePropagator> interactive;  // may be null
};

struct ServiceOptions {
  ReconstructionConfig reconstruction;
  /// Test hook, run while an edit holds its session.
  std::function<void()> on_edit_locked;
};

struct Reply {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";

  nlohmann::json json() const { return nlohmann::json::parse(body); }
};

/// In-memory sessions over uploaded volumes. Models are read-only after
/// construction; edits on one session are serialised and a second edit
/// arriving while one runs is rejected with 409.
class Service {
 public:
  Service(std::map<Target, TargetModels> models, ServiceOptions options = {});

  /// Loads main and interactive checkpoints; each manifest names its target.
  static std::unique_ptr<Service> from_checkpoints(const std::vector<std::filesystem::path>& checkpoints,
                                  const std::vector<std::filesystem::path>& interactive,
                                  ServiceOptions options = {});

  Reply health() const;
  Reply create_volume(const std::string& body);
  Reply slice_png(const std::string& id, const std::string& slice,
                  const std::string& channel) const;
  Reply predict(const std::string& id, const std::string& target);
  Reply edit(const std::string& id, const std::string& body);

  /// Registers the HTTP routes on `server`.
  void mount(httplib::Server& server);

  /// Serves on host:port until stop(); port 0 picks a free port.
  void listen(const std::string& host, int port,
              const std::function<void(int)>& on_bound = {});
  void stop();

 private:
  struct Session {
    std::string id;
    Volume volume;
    std::mutex edit_mutex;
    std::mutex cache_mutex;
    std::map<Target, std::shared_ptr<const VolumePrediction>> predictions;
    std::vector<nlohmann::json> edits;
  };

  std::shared_ptr<Session> find(const std::string& id) const;
  const TargetModels& models_for(Target target) const;
  std::shared_ptr<const VolumePrediction> prediction(Session& session, Target target);

  std::map<Target, TargetModels> models_;
  ServiceOptions options_;
  mutable std::mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_id_ = 1;
  std::shared_ptr<httplib::Server> server_;
};

/// JSON upload body for POST /volumes.
nlohmann::json volume_upload_body(const Volume& vol);

/// Masks travel as base64 of one byte (0 or 1) per pixel.
std::string encode_mask(const Mask& mask);
Mask decode_mask(const std::string& text, std::size_t expected_pixels);

}  // namespace ggpseg
