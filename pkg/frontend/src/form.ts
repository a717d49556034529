/** Schema-driven form state: one field per feature column, in schema order.
 *
 * Categorical fields restrict input to the schema's levels plus an explicit
 * "other / unseen" choice (the server encodes unseen levels as an all-zero
 * group, so they are always legal to submit). Numeric fields validate as
 * finite numbers. Submission is blocked until every field is valid.
 */

import { FeatureMap, SchemaColumn, SchemaDoc } from "./api.js";

export const OTHER_CHOICE = "__other__";

export interface FieldState {
  column: SchemaColumn;
  /** categorical: selected level or OTHER_CHOICE */
  choice: string;
  /** categorical: free text used when choice is OTHER_CHOICE */
  otherText: string;
  /** numeric: raw input text */
  text: string;
}

export interface FormModel {
  fields: FieldState[];
}

export function buildForm(schema: SchemaDoc): FormModel {
  const fields = schema.columns.map((column): FieldState => {
    if (column.kind === "categorical") {
      const levels = column.levels ?? [];
      const fallback = levels.length ? levels[0] : OTHER_CHOICE;
      const preset = column.default != null ? String(column.default) : fallback;
      return {
        column,
        choice: levels.includes(preset) ? preset : fallback,
        otherText: "",
        text: "",
      };
    }
    return {
      column,
      choice: "",
      otherText: "",
      text: column.default != null ? String(column.default) : "",
    };
  });
  return { fields };
}

/** Rebuild for a new schema, keeping prior entries where columns match. */
export function mergeForm(prev: FormModel | null, schema: SchemaDoc): FormModel {
  const next = buildForm(schema);
  if (!prev) {
    return next;
  }
  const byName = new Map(prev.fields.map((f) => [f.column.name, f]));
  for (const field of next.fields) {
    const old = byName.get(field.column.name);
    if (!old || old.column.kind !== field.column.kind) {
      continue;
    }
    if (field.column.kind === "categorical") {
      const levels = field.column.levels ?? [];
      if (old.choice === OTHER_CHOICE || levels.includes(old.choice)) {
        field.choice = old.choice;
        field.otherText = old.otherText;
      }
    } else {
      field.text = old.text;
    }
  }
  return next;
}

export function fieldError(field: FieldState): string | null {
  if (field.column.kind === "categorical") {
    if (field.choice === OTHER_CHOICE && field.otherText.trim() === "") {
      return "enter a value for the unseen level";
    }
    return null;
  }
  if (field.text.trim() === "") {
    return "required";
  }
  const value = Number(field.text);
  if (!Number.isFinite(value)) {
    return "must be a number";
  }
  return null;
}

export function formValid(form: FormModel): boolean {
  return form.fields.every((f) => fieldError(f) === null);
}

/** Column -> raw value map for the API; null while any field is invalid. */
export function formValues(form: FormModel): FeatureMap | null {
  if (!formValid(form)) {
    return null;
  }
  const out: FeatureMap = {};
  for (const field of form.fields) {
    if (field.column.kind === "categorical") {
      out[field.column.name] =
        field.choice === OTHER_CHOICE ? field.otherText.trim() : field.choice;
    } else {
      out[field.column.name] = Number(field.text);
    }
  }
  return out;
}
