use sha2::{Digest, Sha256};

use super::message::hex12;
use super::{ChatBackend, ChatMessage, ChatRequest, ImageAttachment, LlmError};

pub const STUB_TAG: &str = "STUB";

fn frame(hasher: &mut Sha256, label: u8, bytes: &[u8]) {
    hasher.update([label]);
    hasher.update((bytes.len() as u64).to_le_bytes());
    hasher.update(bytes);
}

fn frame_images(hasher: &mut Sha256, images: &[ImageAttachment]) {
    hasher.update((images.len() as u64).to_le_bytes());
    for img in images {
        frame(hasher, b'm', img.mime().as_bytes());
        frame(hasher, b'i', img.bytes());
    }
}

/// Deterministic reply: `STUB[<digest>]: <first 40 chars of text>`.
///
/// The digest is the first 12 hex digits of a length-framed SHA-256 over the
/// system prompt, every history message (role, text, images), the user
/// text and the attached images.
pub fn stub_reply(
    system: Option<&str>,
    history: &[ChatMessage],
    text: &str,
    images: &[ImageAttachment],
) -> String {
    let mut h = Sha256::new();
    match system {
        Some(s) => frame(&mut h, b'S', s.as_bytes()),
        None => h.update(b"N"),
    }
    h.update((history.len() as u64).to_le_bytes());
    for m in history {
        frame(&mut h, b'r', m.role.as_str().as_bytes());
        frame(&mut h, b't', m.text.as_bytes());
        frame_images(&mut h, &m.images);
    }
    frame(&mut h, b'u', text.as_bytes());
    frame_images(&mut h, images);
    let head: String = text.chars().take(40).collect();
    format!("{STUB_TAG}[{}]: {head}", hex12(&h.finalize()))
}

/// Offline backend; a pure function of the conversation.
#[derive(Debug, Default, Clone, Copy)]
pub struct StubBackend;

impl ChatBackend for StubBackend {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        let user = request.last_user().ok_or_else(|| {
            LlmError::InvalidMessage("conversation must end with a user message".into())
        })?;
        Ok(stub_reply(
            request.system_prompt(),
            request.history(),
            &user.text,
            &user.images,
        ))
    }

    fn name(&self) -> &str {
        "stub"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_and_well_formed() {
        let img = ImageAttachment::png(vec![1u8, 2, 3]);
        let a = stub_reply(Some("sys"), &[], "P", std::slice::from_ref(&img));
        let b = stub_reply(Some("sys"), &[], "P", &[img]);
        assert_eq!(a, b);
        assert!(a.starts_with("STUB[") && a.ends_with("]: P"), "{a}");
        assert_eq!(a.len(), "STUB[".len() + 12 + "]: P".len());
    }

    #[test]
    fn empty_inputs_still_well_formed() {
        let r = stub_reply(None, &[], "", &[]);
        assert!(r.starts_with("STUB[") && r.ends_with("]: "), "{r}");
    }

    #[test]
    fn truncates_to_forty_chars() {
        let text = "ß".repeat(50);
        let r = stub_reply(None, &[], &text, &[]);
        assert!(r.ends_with(&"ß".repeat(40)));
        assert!(!r.ends_with(&"ß".repeat(41)));
    }

    #[test]
    fn every_input_moves_the_digest() {
        let img = ImageAttachment::png(vec![9u8]);
        let base = stub_reply(Some("s"), &[], "t", std::slice::from_ref(&img));
        assert_ne!(base, stub_reply(None, &[], "t", std::slice::from_ref(&img)));
        assert_ne!(
            base,
            stub_reply(Some("s2"), &[], "t", std::slice::from_ref(&img))
        );
        assert_ne!(base, stub_reply(Some("s"), &[], "t", &[]));
        assert_ne!(
            base,
            stub_reply(Some("s"), &[], "t", &[ImageAttachment::png(vec![8u8])])
        );
        let hist = [ChatMessage::user("q", vec![]), ChatMessage::assistant("a")];
        assert_ne!(base, stub_reply(Some("s"), &hist, "t", &[img]));
    }

    #[test]
    fn empty_system_differs_from_none() {
        assert_ne!(
            stub_reply(Some(""), &[], "x", &[]),
            stub_reply(None, &[], "x", &[])
        );
    }
}
