#include "rlrestore.h"

int main(int argc, char** argv) {
    return rlr_run_cli(argc - 1, const_cast<const char* const*>(argv) + 1);
}
