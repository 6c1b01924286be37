#include "gmix/cli.hpp"

int main(int argc, char** argv) { return gmix::run_cli(argc, argv); }
