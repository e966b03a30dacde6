// SPDX-License-Identifier: Apache-2.0
#include "poolnet/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace poolnet {

using nlohmann::json;

namespace {

constexpr const char* kFormatName = "poolnet-checkpoint";

std::string readout_name(LstmReadout r) { return r == LstmReadout::final_state ? "final_state" : "mean_over_time"; }

LstmReadout parse_readout(const std::string& s) {
  if (s == "final_state") return LstmReadout::final_state;
  if (s == "mean_over_time") return LstmReadout::mean_over_time;
  throw LoadError("checkpoint: unknown lstm readout '" + s + "'");
}

json network_json(const NetworkConfig& n) {
  return {{"vocab_size", n.vocab_size},
          {"num_classes", n.num_classes},
          {"embedding_dim", n.embedding_dim},
          {"window", n.window},
          {"conv_filters", n.resolved_conv_filters()},
          {"lstm_hidden", n.resolved_lstm_hidden()},
          {"hidden_dim", n.resolved_hidden_dim()},
          {"pooling", to_string(n.pooling)},
          {"branch_mode", to_string(n.branch_mode)},
          {"drop_rate", n.drop_rate},
          {"shared_embedding", n.shared_embedding},
          {"lstm_readout", readout_name(n.lstm_readout)},
          {"init_scale", n.init_scale}};
}

json train_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate},   {"batch_size", c.batch_size},
          {"epochs", c.epochs},                 {"drop_rate", c.drop_rate},
          {"embedding_size", c.embedding_size}, {"window", c.window},
          {"pooling", to_string(c.pooling)},    {"branch_mode", to_string(c.branch_mode)},
          {"seed", c.seed},                     {"validation_fraction", c.validation_fraction},
          {"adam_beta1", c.adam_beta1},         {"adam_beta2", c.adam_beta2},
          {"adam_eps", c.adam_eps},             {"conv_filters", c.conv_filters},
          {"lstm_hidden", c.lstm_hidden},       {"hidden_dim", c.hidden_dim},
          {"shared_embedding", c.shared_embedding}, {"lstm_readout", readout_name(c.lstm_readout)},
          {"init_scale", c.init_scale}};
}

NetworkConfig parse_network(const json& j) {
  NetworkConfig n;
  n.vocab_size = j.at("vocab_size").get<int>();
  n.num_classes = j.at("num_classes").get<int>();
  n.embedding_dim = j.at("embedding_dim").get<int>();
  n.window = j.at("window").get<int>();
  n.conv_filters = j.at("conv_filters").get<int>();
  n.lstm_hidden = j.at("lstm_hidden").get<int>();
  n.hidden_dim = j.at("hidden_dim").get<int>();
  n.pooling = parse_pool_op(j.at("pooling").get<std::string>());
  n.branch_mode = parse_branch_mode(j.at("branch_mode").get<std::string>());
  n.drop_rate = j.at("drop_rate").get<double>();
  n.shared_embedding = j.at("shared_embedding").get<bool>();
  n.lstm_readout = parse_readout(j.at("lstm_readout").get<std::string>());
  n.init_scale = j.at("init_scale").get<double>();
  return n;
}

TrainConfig parse_train(const json& j) {
  TrainConfig c;
  c.learning_rate = j.at("learning_rate").get<double>();
  c.batch_size = j.at("batch_size").get<int>();
  c.epochs = j.at("epochs").get<int>();
  c.drop_rate = j.at("drop_rate").get<double>();
  c.embedding_size = j.at("embedding_size").get<int>();
  c.window = j.at("window").get<int>();
  c.pooling = parse_pool_op(j.at("pooling").get<std::string>());
  c.branch_mode = parse_branch_mode(j.at("branch_mode").get<std::string>());
  c.seed = j.at("seed").get<std::uint64_t>();
  c.validation_fraction = j.at("validation_fraction").get<double>();
  c.adam_beta1 = j.at("adam_beta1").get<double>();
  c.adam_beta2 = j.at("adam_beta2").get<double>();
  c.adam_eps = j.at("adam_eps").get<double>();
  c.conv_filters = j.at("conv_filters").get<int>();
  c.lstm_hidden = j.at("lstm_hidden").get<int>();
  c.hidden_dim = j.at("hidden_dim").get<int>();
  c.shared_embedding = j.at("shared_embedding").get<bool>();
  c.lstm_readout = parse_readout(j.at("lstm_readout").get<std::string>());
  c.init_scale = j.at("init_scale").get<double>();
  return c;
}

/// Network with every array allocated at the configured shape.
HybridNetwork allocate(const NetworkConfig& config) {
  Rng scratch(0);
  return HybridNetwork::create(config, scratch);
}

}  // namespace

std::string save_checkpoint(const TrainedModel& model) {
  json doc;
  doc["format"] = kFormatName;
  doc["format_version"] = kCheckpointVersion;
  doc["hyperparameters"] = network_json(model.network.config);
  doc["train_config"] = train_json(model.config);

  json chars = json::array();
  for (char32_t c : model.vocabulary.characters()) chars.push_back(static_cast<std::uint32_t>(c));
  doc["vocabulary"] = {{"bos", kBosIndex}, {"eos", kEosIndex}, {"unk", kUnkIndex},
                       {"first_character_index", kReservedIndices}, {"code_points", chars}};
  doc["labels"] = model.labels;
  doc["best_validation_accuracy"] = model.best_validation_accuracy;
  doc["best_epoch"] = model.best_epoch;
  doc["training_accuracy"] = model.training_accuracy;

  json params = json::array();
  for (const auto& p : model.network.params()) {
    params.push_back({{"name", p.name},
                      {"rows", p.rows},
                      {"cols", p.cols},
                      {"values", std::vector<double>(p.values.begin(), p.values.end())}});
  }
  doc["parameters"] = std::move(params);
  return doc.dump(1) + "\n";
}

void save_checkpoint(const TrainedModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint '" + path.string() + "'");
  out << save_checkpoint(model);
  if (!out) throw std::runtime_error("failed writing checkpoint '" + path.string() + "'");
}

TrainedModel load_checkpoint(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw LoadError(std::string("checkpoint: malformed JSON: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != kFormatName) throw LoadError("checkpoint: not a poolnet checkpoint");
    const int version = doc.at("format_version").get<int>();
    if (version != kCheckpointVersion) {
      throw LoadError("checkpoint: unsupported format version " + std::to_string(version));
    }

    TrainedModel model;
    const json& vocab = doc.at("vocabulary");
    if (vocab.at("bos").get<int>() != kBosIndex || vocab.at("eos").get<int>() != kEosIndex ||
        vocab.at("unk").get<int>() != kUnkIndex || vocab.at("first_character_index").get<int>() != kReservedIndices) {
      throw LoadError("checkpoint: vocabulary marker indices differ from this build");
    }
    std::vector<char32_t> chars;
    for (const auto& c : vocab.at("code_points")) chars.push_back(static_cast<char32_t>(c.get<std::uint32_t>()));
    const std::size_t declared = chars.size();
    model.vocabulary = CharVocabulary(std::move(chars));
    if (model.vocabulary.characters().size() != declared) {
      throw LoadError("checkpoint: vocabulary code points are not unique");
    }

    model.labels = doc.at("labels").get<std::vector<std::string>>();
    model.config = parse_train(doc.at("train_config"));
    model.best_validation_accuracy = doc.at("best_validation_accuracy").get<double>();
    model.best_epoch = doc.at("best_epoch").get<int>();
    model.training_accuracy = doc.at("training_accuracy").get<double>();

    const NetworkConfig net_cfg = parse_network(doc.at("hyperparameters"));
    if (net_cfg.vocab_size != model.vocabulary.size()) {
      throw LoadError("checkpoint: vocabulary has " + std::to_string(model.vocabulary.size()) +
                      " entries but the network expects " + std::to_string(net_cfg.vocab_size));
    }
    if (net_cfg.num_classes != static_cast<int>(model.labels.size())) {
      throw LoadError("checkpoint: label count does not match the softmax output size");
    }
    model.network = allocate(net_cfg);

    const json& stored = doc.at("parameters");
    const std::vector<ParamView> views = model.network.params();
    if (stored.size() != views.size()) throw LoadError("checkpoint: wrong number of parameter arrays");
    for (std::size_t k = 0; k < views.size(); ++k) {
      const json& p = stored[k];
      if (p.at("name").get<std::string>() != views[k].name || p.at("rows").get<Eigen::Index>() != views[k].rows ||
          p.at("cols").get<Eigen::Index>() != views[k].cols) {
        throw LoadError("checkpoint: parameter '" + views[k].name + "' is missing or has the wrong shape");
      }
      const json& values = p.at("values");
      if (values.size() != views[k].values.size()) {
        throw LoadError("checkpoint: parameter '" + views[k].name + "' has the wrong number of values");
      }
      for (std::size_t i = 0; i < values.size(); ++i) views[k].values[i] = values[i].get<double>();
    }
    return model;
  } catch (const json::exception& e) {
    throw LoadError(std::string("checkpoint: ") + e.what());
  } catch (const ArgumentError& e) {
    throw LoadError(std::string("checkpoint: ") + e.what());
  }
}

TrainedModel load_checkpoint_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open checkpoint '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_checkpoint(buf.str());
}

}  // namespace poolnet
