"""JSON schemas of every file the toolkit reads or writes."""

_NUM = {"type": "number"}
_VEC3 = {"type": "array", "items": _NUM, "minItems": 3, "maxItems": 3}

SEGMENTS = {
    "type": "array",
    "minItems": 1,
    "items": {
        "type": "object",
        "required": ["start_s", "end_s"],
        "properties": {"start_s": _NUM, "end_s": _NUM},
    },
}

CAPTIONS = {
    "type": "array",
    "minItems": 1,
    "items": {
        "type": "object",
        "required": ["start_s", "end_s", "text"],
        "properties": {"start_s": _NUM, "end_s": _NUM, "text": {"type": "string"}},
    },
}

ASSIGNMENT = {
    "type": "object",
    "required": ["instructions", "skipped_segments", "total_cost"],
    "properties": {
        "instructions": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["index", "text", "start_s", "end_s", "segment_indices", "cost"],
                "properties": {
                    "index": {"type": "integer", "minimum": 0},
                    "text": {"type": "string"},
                    "start_s": _NUM,
                    "end_s": _NUM,
                    "segment_indices": {
                        "type": "array",
                        "items": {"type": "integer", "minimum": 0},
                        "minItems": 1,
                    },
                    "cost": {"type": "number", "minimum": 0},
                },
            },
        },
        "skipped_segments": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "total_cost": {"type": "number", "minimum": 0},
    },
}

ARTICULATION = {
    "type": "object",
    "required": ["kind", "rms_residual_m"],
    "properties": {
        "kind": {"enum": ["prismatic", "revolute"]},
        "direction": _VEC3,
        "axis": _VEC3,
        "center": _VEC3,
        "radius": {"type": "number", "exclusiveMinimum": 0},
        "range_m": {"type": "number", "minimum": 0},
        "swept_angle_rad": {"type": "number", "minimum": 0},
        "rms_residual_m": {"type": "number", "minimum": 0},
    },
    "oneOf": [
        {"properties": {"kind": {"const": "prismatic"}}, "required": ["direction", "range_m"]},
        {
            "properties": {"kind": {"const": "revolute"}},
            "required": ["axis", "center", "radius", "swept_angle_rad"],
        },
    ],
}

GROUND_TRUTH = {
    "type": "object",
    "required": ["change_points_s", "instructions"],
    "properties": {
        "change_points_s": {"type": "array", "items": _NUM},
        "instructions": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["text", "start_s", "end_s"],
                "properties": {"text": {"type": "string"}, "start_s": _NUM, "end_s": _NUM},
            },
        },
    },
}

_UNIT = {"type": "number", "minimum": 0, "maximum": 1}
_COUNT = {"type": "integer", "minimum": 0}

CHANGE_POINT_SCORE = {
    "type": "object",
    "required": ["recall", "false_positive_rate", "n_cr", "n_cp", "n_al"],
    "properties": {
        "recall": _UNIT,
        "false_positive_rate": _UNIT,
        "n_cr": _COUNT,
        "n_cp": _COUNT,
        "n_al": _COUNT,
    },
}

MATCH_SCORE = {
    "type": "object",
    "required": ["ap_at", "per_instruction_iou"],
    "properties": {
        "ap_at": {"type": "object", "additionalProperties": _UNIT},
        "per_instruction_iou": {"type": "array", "items": _UNIT},
    },
}

_MEAN_CP = {
    "type": "object",
    "required": ["mean_recall", "mean_false_positive_rate", "pooled"],
    "properties": {
        "mean_recall": _UNIT,
        "mean_false_positive_rate": _UNIT,
        "pooled": CHANGE_POINT_SCORE,
    },
}

SPLIT_EVAL = {
    "type": "object",
    "required": ["videos", "velocity", "sweep"],
    "properties": {
        "videos": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "velocity"],
                "properties": {
                    "name": {"type": "string"},
                    "velocity": CHANGE_POINT_SCORE,
                    "uniform": CHANGE_POINT_SCORE,
                },
            },
        },
        "velocity": _MEAN_CP,
        "uniform": _MEAN_CP,
        "sweep": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["method", "parameter", "mean_recall", "mean_false_positive_rate"],
                "properties": {
                    "method": {"enum": ["velocity", "uniform"]},
                    "parameter": _NUM,
                    "mean_recall": _UNIT,
                    "mean_false_positive_rate": _UNIT,
                },
            },
        },
    },
}

MATCH_EVAL = {
    "type": "object",
    "required": ["videos", "velocity"],
    "properties": {
        "videos": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "velocity"],
                "properties": {
                    "name": {"type": "string"},
                    "velocity": MATCH_SCORE,
                    "uniform": MATCH_SCORE,
                },
            },
        },
        "velocity": {"type": "object", "required": ["mean_ap_at"]},
        "uniform": {"type": "object", "required": ["mean_ap_at"]},
    },
}

PIPELINE_REPORT = {
    "type": "object",
    "required": ["segments", "match", "articulations"],
    "properties": {
        "segments": SEGMENTS,
        "match": ASSIGNMENT,
        "articulations": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["instruction_index", "text", "model"],
                "properties": {
                    "instruction_index": {"type": "integer", "minimum": 0},
                    "text": {"type": "string"},
                    "model": ARTICULATION,
                },
            },
        },
    },
}
