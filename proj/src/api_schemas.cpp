#include "groupscope/api_service.hpp"

namespace groupscope {

namespace {

// Response schemas (JSON Schema draft 2020-12). Bump the version whenever a
// payload changes shape.
constexpr const char* kSchemas = R"json({
  "version": 1,
  "$defs": {
    "number_or_null": {"type": ["number", "null"]},
    "posterior": {
      "type": "object",
      "required": ["Red", "Blue"],
      "properties": {"Red": {"type": "number"}, "Blue": {"type": "number"}}
    },
    "metrics": {
      "type": "object",
      "required": ["count", "accuracy", "f1_red", "attribute_metric", "attribute_metric_name"],
      "properties": {
        "count": {"type": "integer", "minimum": 1},
        "accuracy": {"type": "number", "minimum": 0, "maximum": 1},
        "f1_red": {"type": "number", "minimum": 0, "maximum": 1},
        "attribute_metric": {"type": ["number", "null"]},
        "attribute_metric_name": {"type": ["string", "null"]}
      }
    },
    "cue": {
      "type": "object",
      "required": ["instance_id", "span", "text", "k", "cumulative_attention", "p", "l_len", "r", "f", "w_seq",
                   "mean_attribute_value", "group_posterior"],
      "properties": {
        "instance_id": {"type": "string"},
        "span": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 2, "maxItems": 2},
        "text": {"type": "string"},
        "k": {"type": "integer", "minimum": 1},
        "cumulative_attention": {"type": "number", "exclusiveMinimum": 0, "maximum": 1.000000001},
        "p": {"type": "number", "minimum": 0, "maximum": 1},
        "l_len": {"type": "number", "minimum": 1},
        "r": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "f": {"type": "number", "minimum": 1},
        "w_seq": {"type": "number"},
        "mean_attribute_value": {"type": "number"},
        "group_posterior": {"$ref": "#/$defs/posterior"}
      }
    },
    "tree_node": {
      "type": "object",
      "required": ["id", "depth", "class_counts", "predicted", "impurity", "leaf"],
      "properties": {
        "id": {"type": "integer"},
        "depth": {"type": "integer"},
        "class_counts": {"$ref": "#/$defs/posterior"},
        "predicted": {"enum": ["Red", "Blue"]},
        "impurity": {"type": "number", "minimum": 0, "maximum": 0.5},
        "leaf": {"type": "boolean"},
        "members": {"type": "array", "items": {"type": "string"}},
        "attribute": {"type": "string"},
        "threshold": {"type": "number"},
        "level": {"type": "string"},
        "children": {"type": "array", "items": {"$ref": "#/$defs/tree_node"}, "minItems": 2, "maxItems": 2}
      }
    }
  },
  "endpoints": {
    "error": {
      "type": "object",
      "required": ["error"],
      "properties": {
        "error": {
          "type": "object",
          "required": ["code", "message"],
          "properties": {"code": {"type": "string"}, "message": {"type": "string"}}
        }
      }
    },
    "POST /datasets": {
      "type": "object",
      "required": ["id", "checksum", "n_instances", "n_attributes", "attributes", "group_counts", "split"],
      "properties": {
        "id": {"type": "string"},
        "checksum": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
        "n_instances": {"type": "integer", "minimum": 1},
        "n_attributes": {"type": "integer", "minimum": 1},
        "attributes": {"type": "array", "items": {"type": "string"}},
        "group_counts": {"$ref": "#/$defs/posterior"},
        "split": {"type": ["object", "null"]}
      }
    },
    "GET /instances": {
      "type": "object",
      "required": ["checksum", "query", "total", "page", "page_size", "items"],
      "properties": {
        "checksum": {"type": "string"},
        "query": {"type": "string"},
        "total": {"type": "integer", "minimum": 0},
        "page": {"type": "integer", "minimum": 1},
        "page_size": {"type": "integer", "minimum": 1},
        "items": {
          "type": "array",
          "items": {
            "type": "object",
            "required": ["id", "author_id", "text", "tokens", "group", "split", "attributes", "spans"],
            "properties": {
              "id": {"type": "string"},
              "group": {"enum": ["Red", "Blue"]},
              "tokens": {"type": "array", "items": {"type": "string"}, "minItems": 1},
              "attributes": {
                "type": "object",
                "additionalProperties": {
                  "type": "object",
                  "required": ["value", "score"],
                  "properties": {"value": {"type": ["number", "string"]}, "score": {"type": "number"}}
                }
              },
              "spans": {
                "type": "object",
                "additionalProperties": {
                  "type": "object",
                  "required": ["begin", "end", "cumulative_attention", "group_posterior"]
                }
              }
            }
          }
        }
      }
    },
    "GET /attributes/summary": {
      "type": "object",
      "required": ["checksum", "alpha", "attributes"],
      "properties": {
        "alpha": {"const": 0.05},
        "attributes": {
          "type": "array",
          "items": {
            "type": "object",
            "required": ["attribute", "kind", "groups", "significance"],
            "properties": {
              "kind": {"enum": ["continuous", "categorical"]},
              "groups": {"type": "object", "required": ["Red", "Blue"]},
              "significance": {
                "type": "object",
                "required": ["test", "statistic", "degrees_of_freedom", "p_value", "alpha", "significant"],
                "properties": {
                  "test": {"enum": ["welch_t", "chi_square"]},
                  "p_value": {"type": "number", "minimum": 0, "maximum": 1},
                  "significant": {"type": "boolean"}
                }
              }
            }
          }
        }
      }
    },
    "GET /attributes/{a}/density": {
      "type": "object",
      "required": ["checksum", "attribute", "kind", "groups"],
      "properties": {
        "kind": {"enum": ["continuous", "categorical"]},
        "grid": {"type": "array", "items": {"type": "number"}, "minItems": 101, "maxItems": 101},
        "levels": {"type": "array", "items": {"type": "string"}},
        "groups": {
          "type": "object",
          "required": ["Red", "Blue"],
          "additionalProperties": {
            "type": "object",
            "required": ["degenerate"],
            "properties": {
              "degenerate": {"type": "boolean"},
              "density": {"type": "array", "items": {"type": "number", "minimum": 0}},
              "bandwidth": {"type": "number"},
              "probabilities": {
                "type": "array",
                "items": {
                  "type": "object",
                  "required": ["level", "probability"],
                  "properties": {"probability": {"type": "number", "minimum": 0, "maximum": 1}}
                }
              }
            }
          }
        }
      }
    },
    "GET /subgroups": {
      "type": "object",
      "required": ["checksum", "attributes", "chosen_k", "degenerate_elbow", "elbow_curve", "subgroups"],
      "properties": {
        "chosen_k": {"type": "integer", "minimum": 1},
        "degenerate_elbow": {"type": "boolean"},
        "elbow_curve": {
          "type": "array",
          "items": {"type": "object", "required": ["k", "w"], "properties": {"k": {"type": "integer"}, "w": {"type": "number", "minimum": 0}}}
        },
        "subgroups": {
          "type": "array",
          "items": {
            "type": "object",
            "required": ["subgroup_id", "size", "group_probability", "members", "glyphs"],
            "properties": {
              "subgroup_id": {"type": "integer", "minimum": 1},
              "size": {"type": "integer", "minimum": 1},
              "group_probability": {"type": "number", "minimum": 0, "maximum": 1},
              "members": {"type": "array", "items": {"type": "string"}},
              "glyphs": {
                "type": "array",
                "items": {"type": "object", "required": ["attribute", "center", "spread"]}
              }
            }
          }
        }
      }
    },
    "GET /attributes/{a}/cues": {
      "type": "object",
      "required": ["checksum", "attribute", "weights", "total", "cues"],
      "properties": {
        "weights": {"type": "object", "required": ["u_p", "u_l", "u_r", "u_f"]},
        "total": {"type": "integer", "minimum": 0},
        "cues": {"type": "array", "items": {"$ref": "#/$defs/cue"}}
      }
    },
    "GET /attributes/{a}/cues?format=jsonl (per line)": {"$ref": "#/$defs/cue"},
    "GET /trend": {
      "type": "object",
      "required": ["checksum", "axes", "lines", "bundles"],
      "properties": {
        "axes": {"type": "array", "items": {"type": "string"}},
        "lines": {
          "type": "array",
          "items": {
            "type": "object",
            "required": ["instance_id", "group", "polyline", "bundle_ids"],
            "properties": {"polyline": {"type": "array", "items": {"type": "number"}}}
          }
        },
        "bundles": {
          "type": "array",
          "items": {"type": "object", "required": ["id", "axis", "level", "parent", "count", "red_count"]}
        }
      }
    },
    "GET /eval/histogram": {
      "type": "object",
      "required": ["checksum", "source", "attribute", "metrics", "histogram"],
      "properties": {
        "source": {"enum": ["tree", "neural"]},
        "metrics": {"$ref": "#/$defs/metrics"},
        "histogram": {
          "type": "object",
          "required": ["bin_count", "total", "orientation", "bins"],
          "properties": {
            "bin_count": {"const": 20},
            "orientation": {"const": "blue_top"},
            "bins": {
              "type": "array",
              "minItems": 20,
              "maxItems": 20,
              "items": {
                "type": "object",
                "required": ["lower", "upper", "lower_closed", "correct_count", "wrong_count", "correct_ids", "wrong_ids"]
              }
            }
          }
        }
      }
    },
    "POST /explain": {
      "type": "object",
      "required": ["mode", "fact", "foil", "rule_difference", "counterfactual_example", "narrative", "template_version"],
      "properties": {
        "mode": {"enum": ["p", "o"]},
        "fact": {"type": "object", "required": ["instance_id", "leaf_id", "class"]},
        "foil": {"type": "object", "required": ["leaf_id", "class", "instance_id"]},
        "rule_difference": {
          "type": "array",
          "items": {"type": "object", "required": ["attribute", "text"]}
        },
        "counterfactual_example": {
          "type": "object",
          "required": ["instance_id", "gower_distance", "reliable"],
          "properties": {"gower_distance": {"type": "number", "minimum": 0, "maximum": 1}}
        },
        "narrative": {"type": "string"},
        "template_version": {"type": "integer"}
      }
    },
    "POST /tree/fit": {
      "type": "object",
      "required": ["attributes", "target", "max_depth", "min_leaf", "impurity", "single_class", "root"],
      "properties": {"root": {"$ref": "#/$defs/tree_node"}}
    },
    "POST /models/{a}/train": {
      "type": "object",
      "required": ["attribute", "status", "config"],
      "properties": {"status": {"const": "running"}}
    },
    "GET /models/{a}": {
      "type": "object",
      "required": ["attribute", "status", "config", "log", "error", "best_epoch", "metrics", "checksum"],
      "properties": {
        "status": {"enum": ["running", "done", "failed"]},
        "config": {
          "type": "object",
          "required": ["lambda", "learning_rate", "max_epochs", "batch_size", "early_stop_patience",
                       "gradient_clip_norm", "seed", "hidden_size"]
        },
        "log": {"type": "array", "items": {"type": "object"}},
        "metrics": {"anyOf": [{"$ref": "#/$defs/metrics"}, {"type": "null"}]}
      }
    }
  }
})json";

}  // namespace

nlohmann::json ApiService::response_schemas() { return nlohmann::json::parse(kSchemas); }

}  // namespace groupscope
