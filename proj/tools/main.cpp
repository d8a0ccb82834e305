#include "cli.hpp"

int
main(int argc, char** argv)
{
  return slope::cli::run(argc, argv);
}
