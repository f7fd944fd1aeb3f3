#include "pnid/harness/cli.hpp"

int main(int argc, char** argv) { return pnid::harness::run_cli(argc, argv); }
