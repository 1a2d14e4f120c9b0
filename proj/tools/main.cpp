#include "groupscope/cli.hpp"

int main(int argc, char** argv) { return groupscope::run_cli(argc, argv); }
