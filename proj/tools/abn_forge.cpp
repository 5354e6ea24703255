#include "abn/cli.hpp"

int main(int argc, char** argv) { return abn::cli::run(argc, argv); }
