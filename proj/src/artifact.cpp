/*
 * Copyright 2026 The amlrisk Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <fstream>
#include <sstream>

#include "amlrisk/serialize.hpp"
#include "amlrisk/service.hpp"

namespace amlrisk::service {

namespace {

json body_of(const ModelArtifact& a, bool include_identity) {
  json body = {{"features", serialize::features_to_json(a.features)},
               {"encoder", serialize::encoder_to_json(a.encoder)},
               {"model", serialize::ensemble_to_json(a.model)},
               {"holdout", serialize::report_to_json(a.holdout)},
               {"hyperparameters", a.hyperparameters},
               {"spec", a.spec},
               {"leaderboard", a.leaderboard},
               {"data_fingerprint", a.data_fingerprint},
               {"label_watermark", a.label_watermark},
               {"shap_variant", a.shap_variant}};
  if (include_identity) {
    body["identity"] = {
        {"version_id", a.version_id}, {"created_at", a.created_at}, {"created_unix", a.created_unix}};
  }
  return body;
}

}  // namespace

std::string serialize(const ModelArtifact& a, bool include_identity) {
  json body = body_of(a, include_identity);
  const std::string checksum = hex64(fnv1a(body.dump()));
  json doc = {{"format", kArtifactFormat},
              {"schema_version", kArtifactSchemaVersion},
              {"checksum", checksum},
              {"body", std::move(body)}};
  return doc.dump() + "\n";
}

ModelArtifact deserialize(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw IntegrityError(std::string("corrupt model file: ") + e.what(), e.byte);
  }
  if (!doc.is_object() || doc.value("format", std::string()) != kArtifactFormat) {
    throw IntegrityError("not a model artifact", 0);
  }
  if (doc.value("schema_version", 0) != kArtifactSchemaVersion) {
    throw IntegrityError("unsupported artifact schema version", 0);
  }
  if (!doc.contains("body") || !doc.contains("checksum")) throw IntegrityError("artifact lacks body or checksum", 0);
  const json& body = doc["body"];
  if (hex64(fnv1a(body.dump())) != doc["checksum"].get<std::string>()) {
    const auto at = text.find("\"body\"");
    throw IntegrityError("artifact checksum mismatch", at == std::string::npos ? 0 : at);
  }
  ModelArtifact a;
  try {
    a.features = serialize::features_from_json(body.at("features"));
    a.encoder = serialize::encoder_from_json(body.at("encoder"));
    a.model = serialize::ensemble_from_json(body.at("model"));
    a.holdout = serialize::report_from_json(body.at("holdout"));
    a.hyperparameters = body.at("hyperparameters");
    a.spec = body.at("spec");
    a.leaderboard = body.at("leaderboard");
    a.data_fingerprint = body.at("data_fingerprint").get<std::string>();
    a.label_watermark = body.at("label_watermark").get<std::int64_t>();
    a.shap_variant = body.at("shap_variant").get<std::string>();
    if (body.contains("identity")) {
      const auto& id = body["identity"];
      a.version_id = id.at("version_id").get<std::int64_t>();
      a.created_at = id.at("created_at").get<std::string>();
      a.created_unix = id.at("created_unix").get<double>();
    }
  } catch (const json::exception& e) {
    throw IntegrityError(std::string("malformed artifact: ") + e.what(), 0);
  }
  if (a.encoder.width() != a.model.n_features) {
    throw IntegrityError("encoder width does not match the model's feature count", 0);
  }
  return a;
}

void save_model(const ModelArtifact& a, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(tmp, "cannot open for writing");
    out << serialize(a);
    if (!out) throw IoError(tmp, "write failed");
  }
  std::filesystem::rename(tmp, path);
}

ModelArtifact load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  std::stringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

}  // namespace amlrisk::service
