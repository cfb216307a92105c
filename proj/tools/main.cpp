#include "nbdiff/cli.hpp"

int main(int argc, char** argv) {
  return nbdiff::run_cli(argc, argv);
}
