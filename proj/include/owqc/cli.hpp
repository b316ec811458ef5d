#pragma once

#include <map>

#include "owqc/io.hpp"

namespace owqc {

struct CommandRequest {
  std::string command;
  std::string config_path;
  std::string output_path;
  std::map<std::string, std::string> options;

  std::string option(const std::string& key, const std::string& fallback) const {
    auto it = options.find(key);
    return it == options.end() || it->second.empty() ? fallback : it->second;
  }
};

struct CommandResult {
  int exit_code = 0;
  json report;
};

CommandResult execute(const CommandRequest& req);
void write_report(const json& report, const std::string& path);
// Runs a command and writes its report; failures produce {"error": ...} on stderr and a nonzero status.
int run_command(const CommandRequest& req);

}  // namespace owqc
