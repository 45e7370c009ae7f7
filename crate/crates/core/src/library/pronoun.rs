use crate::schema::NlSchema;
use crate::types::TypeTag;

/// What a question asks for.
#[derive(Debug, Clone, Copy)]
pub enum Subject<'a> {
    Table(&'a str),
    Type(&'a TypeTag),
}

/// The interrogative word for a question whose answer is `subject`.
pub fn pronoun_for(subject: Subject<'_>, schema: &NlSchema) -> &'static str {
    match subject {
        Subject::Table(t) if schema.is_person(t) => "who",
        Subject::Table(_) => "what",
        Subject::Type(ty) => match ty {
            TypeTag::Array(e) => pronoun_for(Subject::Type(e), schema),
            TypeTag::EntityRef(t) => pronoun_for(Subject::Table(t), schema),
            TypeTag::Location => "where",
            TypeTag::Date | TypeTag::Time => "when",
            _ => "what",
        },
    }
}
