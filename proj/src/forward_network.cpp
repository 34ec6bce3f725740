#include "riverweb/forward_network.hpp"

namespace riverweb {

template Site step<FieldConfig>(const FieldConfig&, Site);
template PathTrace path<FieldConfig>(const FieldConfig&, Site, std::int64_t);
template std::vector<std::int64_t> ancestors<FieldConfig>(const FieldConfig&, Site, std::int64_t);
template ClusterExploration explore_cluster<FieldConfig>(const FieldConfig&, Site, std::int64_t,
                                                         std::int64_t);
template Cluster cluster<FieldConfig>(const FieldConfig&, Site, std::int64_t);

}  // namespace riverweb
