#ifndef RNMAX_CLI_HPP
#define RNMAX_CLI_HPP

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace rnmax {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitParse = 3,
  kExitEstimation = 4,
  kExitIo = 5,
};

/// Schema violation in the JSON config; what() starts with the field path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Entry point shared by the executable and the tests. args excludes argv[0].
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Build identifier baked in at configure time.
const char* build_describe();

}  // namespace rnmax

#endif  // RNMAX_CLI_HPP
